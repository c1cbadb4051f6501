"""
Simulator for the all-optical feedforward squeezing gate
"""
__version__ = "1.0.0"
