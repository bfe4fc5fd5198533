"""Characterizing noise in single-layer QAOA circuits through dual channel maps
and products of local channels fitted from single-qubit expectation values."""

__version__ = "0.1.0"
