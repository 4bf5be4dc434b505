"""Kernel of the fermionic projector, the closed chain and its spectrum.

P(x, y) = (i/2) T^(-1) xi_slash + m T^(0) is the regularized vacuum kernel;
the closed chain is A_xy = P(x, y) P(y, x). Its decomposition

    A_xy = b + a_mu gamma^mu + c_i Gamma^i

has real components, and the eigenvalues b +- sqrt(a_mu a^mu - c_i c_i) are
each twofold degenerate.
"""

from dataclasses import dataclass

import numpy as np

from .besselt import t_family
from .clifford import (CHI_L, CHI_R, IDENTITY, big_gamma, decompose,
                       gamma, gamma_lower, spin_adjoint)

__all__ = [
    "ChainComponents", "SpectralData", "ChainError", "fermionic_projector",
    "closed_chain", "chain_components", "eigenvalues_closed_form",
    "projectors_exact", "continuum_spectral", "projector_derivative",
    "continuum_eigenvalues", "direct_eigenvalues",
]

SYMMETRY_TOL = 1e-9
DEGENERACY_TOL = 1e-12


class ChainError(ValueError):
    """Invalid input to a chain operation (asymmetric, degenerate, r = 0)."""


@dataclass(frozen=True)
class ChainComponents:
    """Real components of a closed chain.

    Attributes
    ----------
    b : float
        Scalar part, ``tr(A)/4``.
    a : ndarray, shape (4,)
        Coefficients of gamma^mu, i.e. the lower-index vector ``a_mu``.
    c : ndarray, shape (3,)
        Coefficients of Gamma^i = i gamma^0 gamma^i.
    residual : float
        Largest pseudo-component or imaginary part, relative to the largest
        component.
    """

    b: float
    a: np.ndarray
    c: np.ndarray
    residual: float = 0.0

    def discriminant(self):
        """``tr[(A - b)^2]/4 = a_mu a^mu - c_i c_i``."""
        a = self.a
        return float(a[0] ** 2 - a[1] ** 2 - a[2] ** 2 - a[3] ** 2
                     - np.dot(self.c, self.c))


@dataclass(frozen=True)
class SpectralData:
    """Continuum eigenvalues and the four rank-one spectral projectors.

    ``projectors`` is keyed by ``(s, chirality)`` with ``s`` in ``(+1, -1)``
    and ``chirality`` in ``("L", "R")``.
    """

    lambda_plus: complex
    lambda_minus: complex
    projectors: dict

    def eigenvalue(self, s):
        return self.lambda_plus if s > 0 else self.lambda_minus


def _slash_lower(v_lower):
    return sum(v_lower[mu] * gamma(mu) for mu in range(4))


def fermionic_projector(xi, params, massless=False):
    """Kernel P(x, y) at the displacement ``xi = y - x``.

    Parameters
    ----------
    xi : RegularizedXi
    params : Params
    massless : bool
        Drop the scalar term m T^(0) (the part that does not contribute in the
        continuum limit).

    Returns
    -------
    ndarray, shape (4, 4)
        ``(i/2) T^(-1) xi_slash + m T^(0)``.
    """
    out = 0.5j * t_family(-1, xi, params) * _slash_lower(xi.lower)
    if not massless:
        out = out + params.m * t_family(0, xi, params) * IDENTITY
    return out


def closed_chain(xi, params, massless=False):
    """Closed chain A_xy = P(x, y) P(y, x)."""
    p = fermionic_projector(xi, params, massless)
    p_rev = fermionic_projector(xi.reversed(), params, massless)
    return p @ p_rev


def _symmetry_residual(m):
    scale = max(np.abs(m).max(), np.finfo(float).tiny)
    return np.abs(spin_adjoint(m) - m).max() / scale


def chain_components(A):
    """Decompose a spin-symmetric closed chain into (b, a_mu, c_i).

    Raises
    ------
    ChainError
        If ``A`` is not spin-symmetric to ``1e-9``.
    """
    A = np.asarray(A, dtype=complex)
    if _symmetry_residual(A) > SYMMETRY_TOL:
        raise ChainError("closed chain is not spin-symmetric")
    bc = decompose(A)
    scale = max(np.abs(bc.as_array()).max(), np.finfo(float).tiny)
    # gamma^mu coefficients multiply upper gammas, so they are a_mu
    wanted = np.concatenate([[bc.scalar], bc.vector, bc.bilinear])
    pseudo = np.concatenate([[bc.pseudoscalar], bc.pseudovector, bc.pseudobilinear])
    residual = max(np.abs(pseudo).max(), np.abs(wanted.imag).max()) / scale
    return ChainComponents(float(bc.scalar.real), bc.vector.real.copy(),
                           bc.bilinear.real.copy(), float(residual))


def eigenvalues_closed_form(comp):
    """Return ``(lambda_plus, lambda_minus) = b +- sqrt(a.a - c.c)``.

    The square root is the principal branch; each eigenvalue is twofold
    degenerate. A vanishing discriminant gives ``lambda_plus == lambda_minus``.
    """
    root = np.sqrt(complex(comp.discriminant()))
    return comp.b + root, comp.b - root


def direct_eigenvalues(A):
    """Dense eigensolver spectrum, sorted by real then imaginary part."""
    w = np.linalg.eigvals(np.asarray(A, dtype=complex))
    return w[np.lexsort((w.imag, w.real))]


def projectors_exact(A, comp):
    """Eigenspace projectors Lambda_+- = 1/2 +- (A - b) / sqrt(tr[(A - b)^2]).

    Returns
    -------
    (Lambda_plus, Lambda_minus, info) : tuple
        ``info`` holds the idempotency residual and the eigen-equation
        residual ``|A Lambda - lambda Lambda|``, both relative.

    Raises
    ------
    ChainError
        If ``|tr[(A - b)^2]| < 1e-12 (|b|^2 + 1)`` (light-like separation).
    """
    A = np.asarray(A, dtype=complex)
    shifted = A - comp.b * IDENTITY
    tr2 = np.trace(shifted @ shifted)
    if abs(tr2) < DEGENERACY_TOL * (comp.b ** 2 + 1):
        raise ChainError("degenerate discriminant: points are light-like separated")
    root = np.sqrt(tr2)
    lp = 0.5 * IDENTITY + shifted / root
    lm = 0.5 * IDENTITY - shifted / root
    lam_p, lam_m = comp.b + root / 2, comp.b - root / 2
    idem = max(np.abs(lp @ lp - lp).max(), np.abs(lm @ lm - lm).max())
    scale_a = np.abs(A).max()
    eig = max(np.abs(A @ lp - lam_p * lp).max(), np.abs(A @ lm - lam_m * lm).max())
    info = {"idempotency": float(idem),
            "eigen_residual": float(eig / scale_a),
            "lambda_plus": complex(lam_p), "lambda_minus": complex(lam_m)}
    return lp, lm, info


def continuum_eigenvalues(xi, params):
    """``|T^(-1)|^2 / 4 * (t^2 - r^2 + eps^2 +- 2 i eps r)``."""
    tm = t_family(-1, xi, params)
    q = xi.t ** 2 + xi.eps ** 2 - xi.r ** 2
    w = abs(tm) ** 2 / 4
    return w * (q + 2j * xi.eps * xi.r), w * (q - 2j * xi.eps * xi.r)


def continuum_spectral(xi, params):
    """Continuum-limit eigenvalues and projectors Lambda_(+-, L/R).

    Lambda_(s, L/R) = chi_L/R (1/2 + s i xi_k Gamma^k / (2 r)), with
    ``xi_k`` the lower-index spatial displacement.

    Raises
    ------
    ChainError
        If ``r == 0``.
    """
    r = xi.r
    if r == 0:
        raise ChainError("continuum projectors need r > 0")
    lower = xi.lower.real
    n_op = sum(lower[k] * big_gamma(k) for k in (1, 2, 3)) / r
    lam_p, lam_m = continuum_eigenvalues(xi, params)
    projectors = {}
    for s in (1, -1):
        half = 0.5 * IDENTITY + 0.5j * s * n_op
        projectors[(s, "L")] = CHI_L @ half
        projectors[(s, "R")] = CHI_R @ half
    return SpectralData(lam_p, lam_m, projectors)


def projector_derivative(mu, xi, params):
    """Closed-form x-derivative of P(y, x) in the massless kernel.

    d^(x)_mu P(y, x) = (xib_mu / 2) (Tb^(-2) / Tb^(-1)) P(y, x)
                       + (i/2) Tb^(-1) gamma_mu,

    where ``xib = conj(xi)`` and ``Tb^(n) = conj(T^(n))`` is the kernel at the
    reversed displacement.

    Raises
    ------
    ChainError
        If ``r == 0``.
    """
    if xi.r == 0:
        raise ChainError("projector derivative needs r > 0")
    if mu not in (0, 1, 2, 3):
        raise IndexError("mu must be 0..3")
    rev = xi.reversed()
    tb1 = t_family(-1, rev, params)
    tb2 = t_family(-2, rev, params)
    p_rev = fermionic_projector(rev, params, massless=True)
    return np.conj(xi.lower[mu]) / 2 * (tb2 / tb1) * p_rev + 0.5j * tb1 * gamma_lower(mu)
