"""Eigenvalue-based detection of a single passive emitter with a massive ULA."""

__version__ = "0.1.0"
