"""Discrete black-box optimization with BOCS and GP-Hedge."""

__version__ = "0.1.0"
