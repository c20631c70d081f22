"""Cubic birth-and-death processes, their orthogonal polynomials and Nevanlinna matrices."""

__version__ = "0.1.0"
