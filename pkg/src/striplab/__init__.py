"""Brownian motion on the strip R x (0, pi) and the jump structure of its boundary trace."""

__version__ = "0.1.0"
