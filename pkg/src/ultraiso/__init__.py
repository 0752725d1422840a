"""Isometries of finite-dimensional ultrametric normed spaces."""

__version__ = "0.1.0"
