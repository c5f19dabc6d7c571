"""Lattice KPZ growth, its directed-polymer reference and renormalisation tools."""

__version__ = "0.1.0"
