"""Light-cone expansion of the first-order perturbation by a potential.

For a polynomial potential the formal series

    Delta T[A](x, y) = sum_n T^(n+1)/n! int_0^1 (tau - tau^2)^n (box^n A)(x + tau xi) dtau

terminates, and every tau-integral is a polynomial integral done exactly by
Gauss-Legendre quadrature of sufficient order. The potential is evaluated
along the complex segment, so no analytic continuation is needed.
"""

from dataclasses import dataclass, field
from itertools import product
from math import ceil, factorial

import numpy as np

from .besselt import SUPPORTED_N, t_family
from .clifford import ETA, GAMMA5, gamma

__all__ = [
    "Polynomial", "PolynomialPotential", "SeriesTruncation", "TruncationError",
    "delta_t", "maxwell_perturbation", "maxwell_perturbation_terms",
    "dirac_perturbation", "ladder_residuals", "kg_residual", "TERM_NAMES",
]

_SIGN = np.diag(ETA)


class TruncationError(ValueError):
    """Requested series truncation is below the exact termination order."""


@dataclass(frozen=True)
class Polynomial:
    """Polynomial in the four spacetime coordinates.

    ``terms`` maps exponent tuples ``(e0, e1, e2, e3)`` to real coefficients.
    """

    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for exps, c in self.terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != 4 or min(exps) < 0:
                raise ValueError(f"bad exponent tuple {exps}")
            if c != 0:
                clean[exps] = clean.get(exps, 0.0) + float(c)
        object.__setattr__(self, "terms", {k: v for k, v in sorted(clean.items()) if v != 0})

    @classmethod
    def constant(cls, c):
        return cls({(0, 0, 0, 0): c})

    @classmethod
    def random(cls, degree, rng):
        """Dense polynomial with standard-normal coefficients."""
        return cls({e: rng.normal() for e in product(range(degree + 1), repeat=4)
                    if sum(e) <= degree})

    @property
    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def __add__(self, other):
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return Polynomial(out)

    def __sub__(self, other):
        return self + other.scale(-1.0)

    def scale(self, s):
        return Polynomial({e: s * c for e, c in self.terms.items()})

    def diff(self, k):
        """Partial derivative with respect to x^k."""
        out = {}
        for e, c in self.terms.items():
            if e[k]:
                f = list(e)
                f[k] -= 1
                out[tuple(f)] = c * e[k]
        return Polynomial(out)

    def box(self):
        """Wave operator d^k d_k = d_0^2 - d_1^2 - d_2^2 - d_3^2."""
        out = Polynomial()
        for k in range(4):
            out = out + self.diff(k).diff(k).scale(_SIGN[k])
        return out

    def __call__(self, points):
        """Evaluate at complex points of shape ``(..., 4)``."""
        pts = np.asarray(points, dtype=complex)
        val = np.zeros(pts.shape[:-1], dtype=complex)
        for e, c in self.terms.items():
            val = val + c * np.prod(pts ** np.array(e), axis=-1)
        return val


@dataclass(frozen=True)
class PolynomialPotential:
    """Potential A_mu (lower index) with polynomial components."""

    components: tuple

    def __post_init__(self):
        if len(self.components) != 4:
            raise ValueError("a potential has four components")

    @classmethod
    def random(cls, degree, rng):
        return cls(tuple(Polynomial.random(degree, rng) for _ in range(4)))

    @classmethod
    def gradient(cls, lam):
        """Pure gauge potential A_mu = d_mu lam."""
        return cls(tuple(lam.diff(k) for k in range(4)))

    @classmethod
    def with_current(cls, k_lower):
        """Quadratic potential whose d^nu F_{nu mu} equals the constant ``k_mu``.

        Uses A_mu = k_mu x.x / 6.
        """
        xx = Polynomial({(2, 0, 0, 0): 1.0, (0, 2, 0, 0): -1.0,
                         (0, 0, 2, 0): -1.0, (0, 0, 0, 2): -1.0})
        return cls(tuple(xx.scale(float(k) / 6.0) for k in k_lower))

    def __add__(self, other):
        return PolynomialPotential(tuple(a + b for a, b in
                                         zip(self.components, other.components)))

    @property
    def degree(self):
        return max(a.degree for a in self.components)

    def field_strength(self):
        """F_{mu nu} = d_mu A_nu - d_nu A_mu as a nested tuple of polynomials."""
        a = self.components
        return tuple(tuple(a[nu].diff(mu) - a[mu].diff(nu) for nu in range(4))
                     for mu in range(4))

    def divergence(self):
        """d^nu F_{mu nu}, which is minus the current d^nu F_{nu mu}."""
        f = self.field_strength()
        out = []
        for mu in range(4):
            acc = Polynomial()
            for nu in range(4):
                acc = acc + f[mu][nu].diff(nu).scale(_SIGN[nu])
            out.append(acc)
        return tuple(out)

    def current(self, point):
        """Lower-index current d^nu F_{nu mu} at a real point."""
        return -np.array([d(point) for d in self.divergence()]).real


@dataclass(frozen=True)
class SeriesTruncation:
    """Order of the formal series and the size of its first omitted term."""

    n_max: int
    tail_bound: float = 0.0

    def __post_init__(self):
        if self.n_max < 0:
            raise ValueError("n_max must be >= 0")

    @classmethod
    def exact_for(cls, degree):
        """Exact termination for a polynomial of the given degree."""
        return cls(max(0, ceil(degree / 2)), 0.0)


def _nodes(count):
    x, w = np.polynomial.legendre.leggauss(count)
    return 0.5 * (x + 1.0), 0.5 * w


def _segment(x, xi_upper, tau, shift=0.0):
    base = np.asarray(x, dtype=complex) + np.array([shift, 0, 0, 0], dtype=complex)
    return base[None, :] + tau[:, None] * np.asarray(xi_upper)[None, :]


def delta_t(a, x, xi, params, trunc=None):
    """Series solution Delta T[a](x, y) for one polynomial component.

    Parameters
    ----------
    a : Polynomial
    x : array_like, shape (4,)
        Base point; ``y = x + Re(xi)``.
    xi : RegularizedXi
    params : Params
    trunc : SeriesTruncation, optional
        Defaults to the exact termination order.

    Returns
    -------
    complex

    Raises
    ------
    TruncationError
        If ``trunc.n_max`` is below the exact termination order, or the series
        needs kernels beyond ``T^(3)``.
    """
    exact = SeriesTruncation.exact_for(a.degree)
    if trunc is None:
        trunc = exact
    if trunc.n_max < exact.n_max:
        raise TruncationError(
            f"series for degree {a.degree} needs n_max >= {exact.n_max}")
    if trunc.n_max + 1 > SUPPORTED_N[-1]:
        raise TruncationError("series needs kernels beyond T^(3)")
    tau, w = _nodes(a.degree + 2 * trunc.n_max + 2)
    pts = _segment(x, xi.upper, tau)
    total = 0.0j
    boxed = a
    for n in range(trunc.n_max + 1):
        weight = w * (tau - tau * tau) ** n / factorial(n)
        total += t_family(n + 1, xi, params) * np.dot(weight, boxed(pts))
        boxed = boxed.box()
    return complex(total)


def kg_residual(a, x, xi, params, h):
    """Finite-difference residual of (box_x + m^2) Delta T + a(x) T^(0).

    With the kernel ladder (box_x + m^2) T^(n+1) = -(n+1) T^(n) the series
    solves (box_x + m^2) Delta T = -a(x) T^(0); the n = 0 term of a constant
    potential already shows the sign. The derivatives act on ``x`` with ``y``
    fixed, so ``xi`` shifts by the opposite step. Returns ``(residual, scale)`` where ``scale`` is the
    magnitude of the largest term.
    """
    x = np.asarray(x, dtype=float)

    def dt_at(shift):
        up = xi.upper - shift
        return delta_t(a, x + shift, type(xi)(up[0], up[1:].real), params)

    centre = dt_at(np.zeros(4))
    box = 0.0j
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        box += _SIGN[k] * (dt_at(e) - 2 * centre + dt_at(-e)) / h ** 2
    source = complex(a(x[None, :].astype(complex))[0]) * t_family(0, xi, params)
    resid = box + params.m ** 2 * centre + source
    scale = max(abs(box), abs(params.m ** 2 * centre), abs(source))
    return abs(resid), scale


TERM_NAMES = ("gauge", "current_tau", "field_slash", "field_xi", "current_axis")


def _slash_upper(v_upper):
    # v_mu gamma^mu from an upper-index vector
    return sum(_SIGN[k] * v_upper[k] * gamma(k) for k in range(4))


def maxwell_perturbation_terms(A, x, xi, params, kind="vector"):
    """The five terms of the light-cone expansion of the perturbation.

    The potential is integrated along ``x + (i eps/2) e_0 + tau xi``, the
    segment on which the expansion is spin-symmetric. Terms, in order::

        gauge         -(1/2) xi_slash (xi^mu int A_mu) T^(-1)
        current_tau   +(1/2) xi_slash xi^mu int (tau-tau^2) d^nu F_{mu nu} T^(0)
        field_slash   -(1/4) xi_slash gamma^mu gamma^nu int F_{mu nu} T^(0)
        field_xi      + xi^mu gamma^nu int (1-tau) F_{mu nu} T^(0)
        current_axis  + gamma^mu int (1-tau)^2 d^nu F_{mu nu} T^(1)

    For ``kind="axial"`` every term is multiplied by gamma^5 from the left.

    Returns
    -------
    dict
        Term name to ``(4, 4)`` matrix.
    """
    if kind not in ("vector", "axial"):
        raise ValueError("kind must be 'vector' or 'axial'")
    xi_up = xi.upper
    deg = A.degree
    tau, w = _nodes(max(deg, 0) + 3)
    pts = _segment(x, xi_up, tau, shift=0.5j * xi.eps)
    a_int = np.array([np.dot(w, c(pts)) for c in A.components])
    f = A.field_strength()
    f_vals = np.array([[f[m][n](pts) for n in range(4)] for m in range(4)])
    f_int = f_vals @ w
    f_lin = f_vals @ (w * (1 - tau))
    d_vals = np.array([d(pts) for d in A.divergence()])
    d_tau = d_vals @ (w * (tau - tau * tau))
    d_sq = d_vals @ (w * (1 - tau) ** 2)

    tm1, t0, t1 = (t_family(n, xi, params) for n in (-1, 0, 1))
    xs = _slash_upper(xi_up)
    gg = sum(gamma(a) @ gamma(b) * f_int[a, b] for a in range(4) for b in range(4))
    terms = {
        "gauge": -0.5 * xs * (xi_up @ a_int) * tm1,
        "current_tau": 0.5 * xs * (xi_up @ d_tau) * t0,
        "field_slash": -0.25 * xs @ gg * t0,
        "field_xi": sum(xi_up[a] * gamma(b) * f_lin[a, b]
                        for a in range(4) for b in range(4)) * t0,
        "current_axis": sum(gamma(a) * d_sq[a] for a in range(4)) * t1,
    }
    if kind == "axial":
        terms = {k: GAMMA5 @ v for k, v in terms.items()}
    return terms


def maxwell_perturbation(A, kind, x, xi, params, include_gauge=True):
    """First-order perturbation of P(x, y) by a vector or axial potential.

    Leading light-cone terms for a polynomial potential; see
    ``maxwell_perturbation_terms`` for the individual contributions. Spin
    symmetric: its adjoint equals the perturbation at the reversed
    displacement based at ``y``.
    """
    terms = maxwell_perturbation_terms(A, x, xi, params, kind)
    if not include_gauge:
        terms.pop("gauge")
    return sum(terms.values())


def dirac_perturbation(phi, params=None):
    """Localized perturbation by a constant spinor, phi phi_bar / (2 pi).

    ``phi`` is a 4-spinor or an object with a ``phi`` attribute.
    """
    phi = np.asarray(getattr(phi, "phi", phi), dtype=complex)
    bar = phi.conj() @ gamma(0)
    return np.outer(phi, bar) / (2 * np.pi)


def ladder_residuals(n, xi, params, h):
    """Finite-difference residuals of the kernel ladder identities.

    Property 1 is d_mu T^(n+1) = (xi_mu / 2) T^(n) for the x-derivative,
    property 2 is (box_x + m^2) T^(n+1) = -(n+1) T^(n).
    Both residuals are relative to the largest term.

    Raises
    ------
    ValueError
        If ``h > eps/10`` or the ladder leaves the supported range.
    """
    if h > xi.eps / 10:
        raise ValueError("step h must not exceed eps/10")
    if n not in SUPPORTED_N or n + 1 not in SUPPORTED_N:
        raise ValueError(f"n and n+1 must lie in {SUPPORTED_N}")

    def t_at(k, shift):
        up = xi.upper - shift
        return t_family(k, type(xi)(up[0], up[1:].real), params)

    lower = xi.lower
    centre = t_at(n + 1, np.zeros(4))
    tn = t_family(n, xi, params)
    res1 = 0.0
    scale1 = 0.0
    box = 0.0j
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        plus, minus = t_at(n + 1, e), t_at(n + 1, -e)
        d1 = (plus - minus) / (2 * h)
        want = lower[k] / 2 * tn
        res1 = max(res1, abs(d1 - want))
        scale1 = max(scale1, abs(want), abs(d1))
        box += _SIGN[k] * (plus - 2 * centre + minus) / h ** 2
    kg = box + params.m ** 2 * centre + (n + 1) * tn
    scale2 = max(abs(box), abs(params.m ** 2 * centre), abs((n + 1) * tn))
    return res1 / scale1, abs(kg) / scale2
