"""
Swarm module for Surprise Swarm
Torus grid world, networks, metrics, structure classification and evolution
"""
