# Environments package
