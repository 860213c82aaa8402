"""Simulation of circular coalescing Brownian motion and the stepping-stone model"""

__version__ = "0.1.0"
