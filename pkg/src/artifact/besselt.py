"""Regularized scalar kernels T^(n) and complex-argument Bessel K_nu.

The kernel family is

    T^(n)(xi) = (-1/2)^n m^(2-2n) / (8 pi^3) * z^(n-1) K_|1-n|(z),
    z = m sqrt(r^2 - (t - i eps)^2),

normalized so that T^(0) = (m^2 / 8 pi^3) K_1(z) / z and the derivative
ladder d_mu T^(n+1) = (xi_mu / 2) T^(n) holds for every integer n.
"""

import warnings
from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy import integrate, special

__all__ = [
    "Params", "SpacetimeDisplacement", "RegularizedXi", "BesselDomainError",
    "OracleError", "z_arg", "z_from_tr", "bessel_k", "bessel_k_scaled",
    "t_family", "t_family_tr", "t_family_scaled_tr", "momentum_oracle",
    "momentum_oracle_matrix", "SUPPORTED_N",
]

SUPPORTED_N = (-2, -1, 0, 1, 2, 3)

Z_MIN, Z_MAX = 1e-6, 1e4
_SERIES_RADIUS = 2.0
_ASYMPTOTIC_RADIUS = 16.0
_SERIES_TERMS = 30
_ASYMPTOTIC_TERMS = 30
_LAGUERRE_NODES = 48


class BesselDomainError(ValueError):
    """Raised when the requested Bessel accuracy is not attainable."""


class OracleError(RuntimeError):
    """Raised when the momentum-space radial quadrature does not converge."""


@dataclass(frozen=True)
class Params:
    """Physical and regularization parameters.

    Attributes
    ----------
    m : float
        Fermion mass (inverse length), > 0.
    eps : float
        Regularization length, > 0.
    c : float
        Real constant replacing T^(1) in the Maxwell structure functions.
    lagrange_r : float
        Lagrange multiplier; fixed to 0 in the continuum limit.
    """

    m: float = 1.0
    eps: float = 0.1
    c: float = 0.0
    lagrange_r: float = 0.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"mass must be positive, got {self.m}")
        if not self.eps > 0:
            raise ValueError(f"epsilon must be positive, got {self.eps}")
        if not np.isfinite(self.c):
            raise ValueError("c must be finite")
        if self.lagrange_r != 0:
            raise ValueError("lagrange_r is fixed to 0 in the continuum limit")


@dataclass(frozen=True)
class SpacetimeDisplacement:
    """Time difference t = y0 - x0, spatial radius r and unit direction."""

    t: float
    r: float
    direction: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be non-negative")
        n = np.asarray(self.direction, dtype=float)
        if n.shape != (3,):
            raise ValueError("direction must be a 3-vector")
        if self.r > 0 and abs(np.linalg.norm(n) - 1.0) > 1e-14:
            raise ValueError("direction must be a unit vector")
        object.__setattr__(self, "direction", tuple(float(v) for v in n))


@dataclass(frozen=True)
class RegularizedXi:
    """Complex displacement xi = (t - i eps, r * direction), upper index."""

    xi0: complex
    xi_spatial: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        xs = np.asarray(self.xi_spatial, dtype=float).copy()
        if xs.shape != (3,):
            raise ValueError("spatial part must be a 3-vector")
        if not complex(self.xi0).imag < 0:
            raise ValueError("Im(xi0) must be negative")
        xs.setflags(write=False)
        object.__setattr__(self, "xi_spatial", xs)
        object.__setattr__(self, "xi0", complex(self.xi0))

    @classmethod
    def from_tr(cls, t, r, eps, direction=(0.0, 0.0, 1.0)):
        disp = SpacetimeDisplacement(float(t), float(r), tuple(direction))
        return cls.from_displacement(disp, eps)

    @classmethod
    def from_displacement(cls, disp, eps):
        return cls(disp.t - 1j * eps, disp.r * np.asarray(disp.direction))

    @property
    def eps(self):
        return -self.xi0.imag

    @property
    def t(self):
        return self.xi0.real

    @property
    def r(self):
        return float(np.linalg.norm(self.xi_spatial))

    @property
    def direction(self):
        r = self.r
        return self.xi_spatial / r if r > 0 else np.array([0.0, 0.0, 1.0])

    @property
    def upper(self):
        return np.concatenate([[self.xi0], self.xi_spatial]).astype(complex)

    @property
    def lower(self):
        return np.concatenate([[self.xi0], -self.xi_spatial]).astype(complex)

    def square(self):
        """xi_mu xi^mu = (t - i eps)^2 - r^2."""
        return self.xi0 ** 2 - self.r ** 2

    def reversed(self):
        """Displacement for swapped endpoints: t -> -t, direction -> -direction."""
        return RegularizedXi(-self.xi0.real - 1j * self.eps, -self.xi_spatial)


def z_from_tr(t, r, m, eps):
    """Vectorized Bessel argument m * sqrt(r^2 - (t - i eps)^2)."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    return m * np.sqrt((r * r - t * t + eps * eps) + 2j * eps * t)


def z_arg(xi, params):
    """Bessel argument z = m sqrt(r^2 - xi0^2) on the principal branch.

    ``Re z > 0`` always: the radicand reaches the negative real axis only for
    t = 0, where it equals r^2 + eps^2 > 0.
    """
    return complex(params.m * np.sqrt(xi.r ** 2 - xi.xi0 ** 2 + 0j))


# ---------------------------------------------------------------------------
# K_nu for integer nu >= 0


def _series_scaled(nu, z):
    # ascending series with the logarithmic term, times exp(z)
    w = 0.25 * z * z
    half = 0.5 * z
    total = np.zeros_like(z)
    if nu > 0:
        term = np.ones_like(z)
        for k in range(nu):
            total = total + factorial(nu - k - 1) / factorial(k) * term
            term = term * (-w)
        total = 0.5 * total / half ** nu
    inu = np.zeros_like(z)
    psum = np.zeros_like(z)
    term = np.ones_like(z) / factorial(nu)
    for k in range(_SERIES_TERMS):
        inu = inu + term
        psum = psum + (special.digamma(k + 1) + special.digamma(nu + k + 1)) * term
        term = term * w / ((k + 1) * (nu + k + 1))
    sign = -1.0 if nu % 2 else 1.0
    total = total - sign * np.log(half) * half ** nu * inu
    total = total + sign * 0.5 * half ** nu * psum
    return total * np.exp(z)


def _asymptotic_scaled(nu, z):
    mu = 4.0 * nu * nu
    term = np.ones_like(z)
    total = np.ones_like(z)
    for k in range(1, _ASYMPTOTIC_TERMS + 1):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * z)
        total = total + term
    return np.sqrt(np.pi / (2.0 * z)) * total


_LAGUERRE = {}


def _laguerre_rule(nu):
    if nu not in _LAGUERRE:
        x, w = special.roots_genlaguerre(_LAGUERRE_NODES, nu - 0.5)
        _LAGUERRE[nu] = (x, w / special.gamma(nu + 0.5))
    return _LAGUERRE[nu]


def _integral_scaled(nu, z):
    # K_nu(z) = sqrt(pi/2z) e^-z / Gamma(nu+1/2)
    #           * int_0^inf e^-s s^(nu-1/2) (1 + s/2z)^(nu-1/2) ds
    x, w = _laguerre_rule(nu)
    out = np.empty_like(z)
    for start in range(0, len(z), 4096):
        zc = z[start:start + 4096]
        s = (1.0 + x[:, None] / (2.0 * zc[None, :])) ** (nu - 0.5)
        out[start:start + 4096] = np.sqrt(np.pi / (2.0 * zc)) * (w @ s)
    return out


def bessel_k_scaled(nu, z):
    """Return exp(z) K_nu(z) for integer ``nu >= 0`` and ``Re z > 0``.

    No domain checks; vectorized over ``z``. Used by the kernel family so that
    large arguments neither overflow nor lose the phase of K.
    """
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    out = np.empty_like(z)
    az = np.abs(z)
    small = az <= _SERIES_RADIUS
    large = az >= _ASYMPTOTIC_RADIUS
    mid = ~(small | large)
    if small.any():
        out[small] = _series_scaled(nu, z[small])
    if large.any():
        out[large] = _asymptotic_scaled(nu, z[large])
    if mid.any():
        out[mid] = _integral_scaled(nu, z[mid])
    return out.reshape(shape)


def bessel_k(nu, z):
    """Modified Bessel function of the second kind K_nu(z).

    Parameters
    ----------
    nu : int
        Order in ``0..3``.
    z : complex or array_like
        Argument with ``Re z > 0`` and ``1e-6 <= |z| <= 1e4``.

    Returns
    -------
    complex or ndarray
        K_nu(z) to relative accuracy 1e-10.

    Raises
    ------
    BesselDomainError
        If ``z`` lies outside the working domain.

    Notes
    -----
    Three regimes: the ascending series with its logarithmic term for
    ``|z| <= 2``, the large-argument asymptotic expansion for ``|z| >= 16``,
    and in between the integral representation

        K_nu(z) = sqrt(pi/2z) e^-z / Gamma(nu+1/2)
                  * int_0^inf e^-s s^(nu-1/2) (1 + s/2z)^(nu-1/2) ds,

    evaluated by generalized Gauss-Laguerre quadrature. Unlike the
    ``cosh`` representation this integrand does not oscillate when
    ``|arg z|`` approaches pi/2.
    """
    if nu not in (0, 1, 2, 3):
        raise ValueError(f"order must be 0..3, got {nu!r}")
    zz = np.asarray(z, dtype=complex)
    az = np.abs(zz)
    if np.any(zz.real <= 0) or np.any(az < Z_MIN * (1 - 1e-12)) \
            or np.any(az > Z_MAX * (1 + 1e-12)):
        raise BesselDomainError(
            "K_nu accuracy is only guaranteed for Re z > 0 and "
            f"{Z_MIN:g} <= |z| <= {Z_MAX:g}")
    val = bessel_k_scaled(nu, zz) * np.exp(-zz)
    return complex(val) if np.ndim(z) == 0 else val


# ---------------------------------------------------------------------------
# kernel family


def _check_n(n):
    if n not in SUPPORTED_N:
        raise ValueError(f"T^(n) supported for n in {SUPPORTED_N}, got {n!r}")


def _prefactor(n, m):
    return (-0.5) ** n * m ** (2 - 2 * n) / (8.0 * np.pi ** 3)


def t_family_scaled_tr(n, t, r, params):
    """Return ``(exp(z) T^(n), z)`` on arrays of (t, r).

    The exponential factor is kept separate so that products and ratios of
    kernels stay finite far from the origin.
    """
    _check_n(n)
    z = z_from_tr(t, r, params.m, params.eps)
    val = _prefactor(n, params.m) * z ** (n - 1) * bessel_k_scaled(abs(1 - n), z)
    return val, z


def t_family_tr(n, t, r, params):
    """Vectorized T^(n)(t, r)."""
    val, z = t_family_scaled_tr(n, t, r, params)
    return val * np.exp(-z)


def t_family(n, xi, params):
    """Kernel T^(n) at the regularized displacement ``xi``.

    Parameters
    ----------
    n : int
        Ladder index; ``n`` in ``SUPPORTED_N``. T^(-2), T^(2) and T^(3) follow
        from extending the ladder d_mu T^(n+1) = (xi_mu/2) T^(n).
    xi : RegularizedXi
    params : Params

    Returns
    -------
    complex
    """
    _check_n(n)
    z = z_arg(xi, params)
    k = bessel_k(abs(1 - n), z)
    return complex(_prefactor(n, params.m) * z ** (n - 1) * k)


# ---------------------------------------------------------------------------
# momentum-space oracle

_COMPONENTS = ("scalar", "vector0", "vector_r")


def _j1(x):
    # spherical Bessel j1 with a series near zero
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-3
    xs = x[small]
    out[small] = xs / 3.0 - xs ** 3 / 30.0
    xl = x[~small]
    out[~small] = np.sin(xl) / xl ** 2 - np.cos(xl) / xl
    return out


def _radial_integrand(component, k, t, r, m, eps):
    k = np.asarray(k, dtype=float)
    omega = np.sqrt(k * k + m * m)
    phase = np.exp(-1j * omega * (t - 1j * eps))
    if component == "vector_r":
        return 1j * k ** 3 / omega * _j1(k * r) * phase / (8 * np.pi ** 3)
    sinc = np.sinc(k * r / np.pi)
    if component == "scalar":
        return m * k * k / omega * sinc * phase / (8 * np.pi ** 3)
    return -k * k * sinc * phase / (8 * np.pi ** 3)


def momentum_oracle(component, xi, params, tol=1e-9):
    """Direct momentum-space integration of one component of P(x, y).

    Evaluates int d^4k/(2 pi)^4 (kslash + m) delta(k^2 - m^2) Theta(-k0)
    exp(-ik(x-y)) exp(eps k0) after doing the k0 and angular integrals
    analytically, leaving a damped oscillatory radial integral.

    Parameters
    ----------
    component : {"scalar", "vector0", "vector_r"}
        Coefficient of the identity, of gamma^0, or of gamma^j contracted with
        the unit direction.
    xi : RegularizedXi
    params : Params
        ``params.eps`` must match ``xi``.
    tol : float
        Requested relative accuracy, ``>= 1e-10``.

    Returns
    -------
    complex

    Raises
    ------
    OracleError
        If the quadrature error estimate or the analytic tail bound exceeds
        the tolerance.
    """
    if component not in _COMPONENTS:
        raise ValueError(f"component must be one of {_COMPONENTS}")
    if tol < 1e-10:
        raise ValueError("tol must be >= 1e-10")
    t, r, m, eps = xi.t, xi.r, params.m, xi.eps
    # exp(-eps k) < 1e-18 beyond kmax; the tail bound is checked below
    kmax = 42.0 / eps
    nosc = max(1, int((abs(t) + r) * kmax / np.pi) + 1)
    breaks = np.linspace(0.0, kmax, min(nosc, 400) + 1)
    re = im = 0.0
    err = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        for part, fn in ((0, np.real), (1, np.imag)):
            with warnings.catch_warnings():
                # convergence is judged from the returned error estimate
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, e = integrate.quad(
                    lambda k: float(fn(_radial_integrand(component, k, t, r, m, eps))),
                    a, b, epsabs=0.0, epsrel=tol * 1e-2, limit=200)
            if part == 0:
                re += val
            else:
                im += val
            err += e
    result = re + 1j * im
    # |integrand| <= k^3 exp(-eps k) / (8 pi^3 omega) * max(m, 1, k)
    tail = (kmax ** 3 + 3 * kmax ** 2 / eps + 6 * kmax / eps ** 2 + 6 / eps ** 3) \
        * np.exp(-eps * kmax) / eps / (8 * np.pi ** 3) * max(m, 1.0)
    if err + tail > tol * abs(result):
        raise OracleError(
            f"radial quadrature not converged: error {err + tail:.3e} vs "
            f"value {abs(result):.3e}")
    return complex(result)


def momentum_oracle_matrix(xi, params, tol=1e-9):
    """Assemble the full 4x4 P(x, y) from the three oracle components."""
    from .clifford import gamma

    s = momentum_oracle("scalar", xi, params, tol)
    v0 = momentum_oracle("vector0", xi, params, tol)
    vr = momentum_oracle("vector_r", xi, params, tol)
    n = xi.direction
    out = s * np.eye(4, dtype=complex) + v0 * gamma(0)
    out = out + vr * sum(n[j] * gamma(j + 1) for j in range(3))
    return out
