"""Spectral projection of relational graphs and order-book liquidity geometry."""

__version__ = "0.1.0"
