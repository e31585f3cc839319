"""Hyperbolic role inference for tokenized-asset transaction graphs."""

__version__ = "0.1.0"
