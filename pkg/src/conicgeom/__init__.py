"""Conic geometry toolkit: restricted norms and singular values of matrices,
biconic feasibility, conic intrinsic volumes and Gaussian comparison bounds."""

__version__ = "0.1.0"
