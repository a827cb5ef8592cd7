"""Numerical lab for smoothed Szego and Poisson kernels on flat-torus Grauert tubes."""

__version__ = "0.1.0"
