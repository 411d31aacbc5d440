"""
Surprise Swarm - Self-assembly of robot swarms evolved to minimize surprise
"""

__version__ = "0.1.0"
__author__ = "Surprise Swarm"
