"""
Experiments module for Surprise Swarm
Scenario runner, damage protocols, run records, command line and HTTP service
"""
