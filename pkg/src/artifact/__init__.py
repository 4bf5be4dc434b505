"""Regularized Dirac-sea kernels, closed chains and current coefficients."""
from . import besselt, chain, clifford, coeffs, currents, lightcone, quadrature

__all__ = ["besselt", "chain", "clifford", "coeffs", "currents", "lightcone",
           "quadrature"]
__version__ = "0.1.0"
