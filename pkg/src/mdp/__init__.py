# MDP package
