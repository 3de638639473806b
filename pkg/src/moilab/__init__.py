"""Finite-dimensional laboratory for multiple operator integrals, operator
Taylor remainders along linear and multiplicative paths, and spectral shift
densities, verified as exact or tolerance-bounded matrix identities."""

from .linalg import CMatrix, SpectralDecomposition, random_operator, schatten_norm, spectral_decompose

__all__ = [
    "CMatrix",
    "SpectralDecomposition",
    "random_operator",
    "schatten_norm",
    "spectral_decompose",
]
