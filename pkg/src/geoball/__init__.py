"""Dirichlet eigenvalues of geodesic balls on rotationally symmetric spaces."""

__version__ = "0.1.0"
