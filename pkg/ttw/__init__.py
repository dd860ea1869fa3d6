"""
Quantum and classical mechanics of the TTW potential.
"""
__version__ = "0.1.0"
