"""Numerical laboratory for projective measurement, measurement chains and coherent-state coarse-graining."""

__version__ = "0.1.0"
