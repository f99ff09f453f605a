"""Distributional chaos toolkit for discrete dynamical systems."""

__version__ = "0.1.0"
