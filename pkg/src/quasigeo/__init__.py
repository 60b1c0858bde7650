"""Closed quasigeodesics on polyhedral spheres."""

__version__ = "0.1.0"
