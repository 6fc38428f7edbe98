"""Plasmonic resonance and quasi-normal mode toolkit for convex nanoparticles."""
__version__ = "0.1.0"
