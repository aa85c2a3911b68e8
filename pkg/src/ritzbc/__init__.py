"""Boundary-condition strategies for the Deep Ritz method on model Poisson problems."""

__version__ = "0.1.0"
