# Learners package
