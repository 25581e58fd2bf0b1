"""Sampling, reductions and statistical checks for LWE-based hardness of
agnostically learning halfspaces and ReLUs under Gaussian marginals."""

__version__ = "0.1.0"
