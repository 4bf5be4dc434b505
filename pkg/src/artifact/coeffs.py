"""Current coefficients C^(.) as two-dimensional integrals over (t, r).

After the angular integration every coefficient is an integral over
t in R and r >= 0 of a combination of the structure functions f_s, f_a with
the weights |T^(-1)|^4/|lambda|^2 = 16/(q^2 + 4 eps^2 r^2) and
Im[T^(-2)/T^(-1) ...].

The integrals are evaluated over the whole half plane, not over a box:

* The time axis is folded, g(t) + g(-t), and both wedges are written in the
  null coordinates p = |t - r|/eps (distance from the light cone) and
  w = 2 min(t, r)/eps (position along it). Each axis is split at ``L``; the
  tail beyond ``L`` is mapped by p = L/X, which captures the power-law decay
  along the light cone.
* Deep inside the light cone the massive kernels oscillate like exp(-i m s)
  in the proper time s with only power-law damping. Beyond m s = 20 the
  s-integral is rotated to s = s0 - i y, where all integrands are analytic
  and decay exponentially. Analytic continuation of the conjugate kernel
  passes through the left half plane of the Bessel argument, which the
  asymptotic expansion covers for |z| >= 20.
"""

from dataclasses import dataclass, field
from math import gamma as _gamma

import numpy as np

from .besselt import Params, bessel_k_scaled, t_family_scaled_tr, t_family_tr, _prefactor
from .currents import FAULTS, dirac_structure_functions, frozen_ratio
from .quadrature import CubatureError, adaptive_cubature

__all__ = [
    "COEFFICIENT_NAMES", "RATIO_NAMES", "IDENTITY_NAMES", "QuadratureSpec", "CoefficientTable",
    "CoefficientError", "TailBoundError", "ZeroCoefficientError", "AlphaResult",
    "angular_weights", "coefficient", "coefficient_table", "coupling_alpha",
    "epsilon_scan", "integrand_fields",
]

COEFFICIENT_NAMES = ("C0", "Ct_PS", "Ct_PB", "Cr_PS", "Cr_PB",
                     "Ct_S", "Ct_B", "Cr_S", "Cr_B")
RATIO_NAMES = ("C0", "Ct_PS", "Ct_PB", "Cr_PS", "Cr_PB")
# (2 pi/3) int f_s r^2 Im[R xi0] and (2 pi/3) int f_a r^3 Im R, the
# differences Ct_PB - Cr_PS and Cr_PB - Ct_PS computed on their own
IDENTITY_NAMES = ("I_s", "I_a")
_COMPONENTS = COEFFICIENT_NAMES + IDENTITY_NAMES + ("parity_future", "parity_past")

# m * s beyond which the proper-time integral is taken along the rotated ray
ROTATION_RADIUS = 20.0
# the rotated region is cut at cosh(eta) = _ETA_CUT / (m eps); the real-axis
# integrand there is below exp(-3 * sqrt(ROTATION_RADIUS * _ETA_CUT))
_ETA_CUT = 40.0


class CoefficientError(RuntimeError):
    """The quadrature did not reach the requested tolerance."""


class TailBoundError(CoefficientError):
    """Doubling the splitting scale L changed a coefficient too much."""


class ZeroCoefficientError(CoefficientError):
    """No Dirac coefficient is distinguishable from zero."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Quadrature configuration.

    Attributes
    ----------
    L : float
        Splitting scale in units of eps between the core and the mapped tail
        of each null coordinate, >= 10.
    rel_tol : float
        Relative tolerance in [1e-10, 1e-3].
    max_subdivisions : int
        Cell budget of the adaptive cubature.
    """

    L: float = 40.0
    rel_tol: float = 1e-8
    max_subdivisions: int = 200000

    def __post_init__(self):
        if not self.L >= 10:
            raise ValueError(f"L must be >= 10, got {self.L}")
        if not 1e-10 <= self.rel_tol <= 1e-3:
            raise ValueError(f"rel_tol must lie in [1e-10, 1e-3], got {self.rel_tol}")
        if int(self.max_subdivisions) < 16:
            raise ValueError("max_subdivisions must be >= 16")

    def doubled(self):
        return QuadratureSpec(2 * self.L, self.rel_tol, self.max_subdivisions)


@dataclass(frozen=True)
class CoefficientTable:
    """Named coefficients with error estimates.

    Attributes
    ----------
    values : dict
        ``name -> (value, error_estimate)`` for every name in
        ``COEFFICIENT_NAMES``.
    l1 : dict
        ``name -> integral of |integrand|``, the scale for vanishing values.
    identities : dict
        ``name -> (value, error)`` for ``IDENTITY_NAMES``.
    parity : tuple
        ``(value, error, scale)`` of the C0 integrand with f_a substituted for
        f_s; odd in t, so the value must vanish relative to ``scale``.
    params : Params
    quad : QuadratureSpec
    family : str
        ``"dirac"`` or ``"maxwell"`` (frozen Maxwell structure functions).
    n_cells : int
    tail_change : dict or None
        ``name -> |C(2L) - C(L)|`` when the doubling check was run.
    """

    values: dict
    l1: dict
    identities: dict
    parity: tuple
    params: Params
    quad: QuadratureSpec
    family: str = "dirac"
    n_cells: int = 0
    tail_change: dict = field(default=None)

    def value(self, name):
        return self.values[name][0]

    def error(self, name):
        return self.values[name][1]

    def vanishing(self, name):
        """True when the value is within its own error estimate."""
        v, e = self.values[name]
        return abs(v) <= e

    def parity_ok(self):
        v, e, scale = self.parity
        return abs(v) <= self.quad.rel_tol * scale


def angular_weights(*indices):
    """Integral over the unit sphere of a product of direction components.

    ``angular_weights(i)`` is the integral of n^i, ``angular_weights(i, j)``
    that of n^i n^j, and so on; indices run over 1..3.

    Returns
    -------
    float
        Zero unless every component appears an even number of times; then
        2 Gamma((a+1)/2) Gamma((b+1)/2) Gamma((c+1)/2) / Gamma((a+b+c+3)/2)
        for exponents (a, b, c). ``angular_weights(i, i)`` is 4 pi / 3.
    """
    powers = [0, 0, 0]
    for i in indices:
        if i not in (1, 2, 3):
            raise IndexError(f"spatial index must be 1..3, got {i!r}")
        powers[i - 1] += 1
    if any(p % 2 for p in powers):
        return 0.0
    a, b, c = powers
    return 2 * _gamma((a + 1) / 2) * _gamma((b + 1) / 2) * _gamma((c + 1) / 2) \
        / _gamma((a + b + c + 3) / 2)


# ---------------------------------------------------------------------------
# integrands


def _combine(fs, fa, t, r, eps, weight, im_rtau, im_r):
    # weight = |T|^4/|lambda|^2, im_rtau = Im[R xi0], im_r = Im R with
    # R = T^(-2)/T^(-1); the same algebra serves the rotated ray
    a = weight * fs * (t * t + r * r + eps * eps) * r * r * eps
    b = fs * r * r * im_rtau
    cc = weight * fa * t * r ** 3 * eps
    d = fa * r ** 3 * im_r
    pi = np.pi
    return [
        4 * pi * r * r * fs,
        -pi / 2 * cc,
        -pi / 12 * a + 2 * pi / 3 * b,
        -pi / 12 * a,
        2 * pi * (d / 3 - cc / 4),
        -pi / 2 * a - 4 * pi * b,
        pi / 24 * a + 4 * pi / 3 * b,
        -pi / 3 * cc - 4 * pi / 3 * d,
        -pi / 2 * a,
        2 * pi / 3 * b,
        2 * pi / 3 * d,
    ]


def integrand_fields(t, r, params, fault=None):
    """Pointwise integrands of all coefficients at real (t, r).

    Returns an array of shape ``(12,) + shape`` ordered as
    ``COEFFICIENT_NAMES + IDENTITY_NAMES`` followed by the parity integrand
    4 pi r^2 f_a.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    eps = params.eps
    fs, fa = dirac_structure_functions(t, r, params, fault=fault)
    t1, _ = t_family_scaled_tr(-1, t, r, params)
    t2, _ = t_family_scaled_tr(-2, t, r, params)
    ratio = t2 / t1
    q = t * t + eps * eps - r * r
    weight = 16.0 / (q * q + 4 * eps * eps * r * r)
    out = _combine(fs, fa, t, r, eps, weight, (ratio * (t - 1j * eps)).imag, ratio.imag)
    out.append(4 * np.pi * r * r * fa)
    return np.array(out)


def _folded(t, r, params, fault):
    # g(t) + g(-t) for t >= 0 with a single kernel evaluation; the parity
    # integrand is returned per half
    eps = params.eps
    t1, z = t_family_scaled_tr(-1, t, r, params)
    t2, _ = t_family_scaled_tr(-2, t, r, params)
    e = np.exp(-z)
    ratio = t2 / t1
    q = t * t + eps * eps - r * r
    weight = 16.0 / (q * q + 4 * eps * eps * r * r)
    out = 0.0
    halves = []
    for sign in (1.0, -1.0):
        # T(-t, r) = conj T(t, r)
        T = t1 * e if sign > 0 else np.conj(t1 * e)
        R = ratio if sign > 0 else np.conj(ratio)
        ts = sign * t
        tau = ts - 1j * eps
        abs2 = np.abs(T) ** 2
        fs = abs2 * (2 * eps * r * r * T.real - q * (T * tau).imag) / (32 * np.pi)
        fa = abs2 * (2 * eps * r * (T * tau).real - q * r * T.imag) / (32 * np.pi)
        if fault == "fa_sign" and sign < 0:
            fa = -fa
        out = out + np.array(_combine(fs, fa, ts, r, eps, weight,
                                      (R * tau).imag, R.imag))
        halves.append(4 * np.pi * r * r * fa)
    return np.concatenate([out, np.array(halves)])


def _kernels_of_z(z, m):
    # exp(z)-scaled T^(-1) and T^(-2) as functions of the Bessel argument
    k2 = bessel_k_scaled(2, z)
    k3 = bessel_k_scaled(3, z)
    return _prefactor(-1, m) * k2 / z ** 2, _prefactor(-2, m) * k3 / z ** 3


def _rotated(s, c, sh, params, fault):
    # Analytic integrands G on complex proper time s at rapidity eta
    # (c = cosh eta, sh = sinh eta); on the real axis the folded integrand is
    # 2 Re G. T is continued from the kernel, U from its complex conjugate;
    # T^2 U carries the phase exp(-i m s), which decays for Im s < 0.
    m, eps = params.m, params.eps
    zt = m * np.sqrt(-s * s + 2j * eps * s * c + eps * eps)
    zu = m * np.sqrt(-s * s - 2j * eps * s * c + eps * eps)
    # continuity of the conjugate branch: its argument stays below the axis
    zu = np.where(zu.imag > 0, -zu, zu)
    tt, t2 = _kernels_of_z(zt, m)
    uu, u2 = _kernels_of_z(zu, m)
    rt = t2 / tt
    ru = u2 / uu
    prod = tt * tt * uu * np.exp(-2 * zt - zu) / (32 * np.pi)
    t = s * c
    r = s * sh
    q = t * t + eps * eps - r * r
    weight = 16.0 / (q * q + 4 * eps * eps * r * r)
    # future cone: kernel T, xi0 = t - i eps
    tau, taub = t - 1j * eps, t + 1j * eps
    fs = prod * (eps * r * r + 0.5j * q * tau)
    fa = prod * (eps * r * tau + 0.5j * q * r)
    out = np.array(_combine(fs, fa, t, r, eps, weight,
                            (rt * tau - ru * taub) / 2j, (rt - ru) / 2j))
    fut = 4 * np.pi * r * r * fa
    # past cone: the kernel at -t is U; G is the conjugate-phase part
    tp = -t
    taup, taupb = tp - 1j * eps, tp + 1j * eps
    fs = prod * (eps * r * r - 0.5j * q * taupb)
    fa = prod * (eps * r * taupb - 0.5j * q * r)
    if fault == "fa_sign":
        fa = -fa
    out = out + np.array(_combine(fs, fa, tp, r, eps, weight,
                                  (ru * taup - rt * taupb) / 2j, (ru - rt) / 2j))
    past = 4 * np.pi * r * r * fa
    return np.concatenate([out, np.array([fut, past])])


def _regions(params, L):
    """Initial cells and a list of region descriptors."""
    m, eps = params.m, params.eps
    s0 = ROTATION_RADIUS / m
    pmax = s0 / eps
    q0 = pmax * pmax
    regions = []
    cells = []

    def add(desc, x0, x1, y0, y1):
        cells.append((x0, x1, y0, y1, len(regions)))
        regions.append(desc)

    # spacelike wedge, each null coordinate split at L
    for pt in (False, True):
        for wt in (False, True):
            add(("space", pt, wt), 0.0, 1.0 if pt else L, 0.0, 1.0 if wt else L)
    # timelike wedge inside the hyperbola s = s0
    pc = 0.5 * (-L + np.sqrt(L * L + 4 * q0))
    breaks = sorted({0.0, min(L, pmax), pc, pmax})
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b <= a:
            continue
        inv = a >= L
        x0, x1 = (L / b, L / a) if inv else (a, b)
        if b <= pc:
            add(("time", inv, "core", q0), x0, x1, 0.0, L)
            add(("time", inv, "tail", q0), x0, x1, 0.0, 1.0)
        else:
            add(("time", inv, "clip", q0), x0, x1, 0.0, 1.0)
    # rotated ray beyond s0 for both cones
    c_cut = max(_ETA_CUT / (m * eps), 2.0)
    eta_cut = float(np.arccosh(c_cut))
    eta1 = float(np.arccosh(max(ROTATION_RADIUS / (2 * m * eps), 1.5)))
    eta1 = min(eta1, 0.5 * eta_cut)
    for lo, hi in ((0.0, eta1), (eta1, eta_cut)):
        add(("far", False, s0), lo, hi, 0.0, s0)
        add(("far", True, s0), lo, hi, 0.0, 1.0)
    return cells, regions


def _make_integrand(params, L, fault, scale):
    eps = params.eps
    cells, regions = _regions(params, L)

    def func(x, y, reg):
        out = np.zeros((len(_COMPONENTS),) + x.shape)
        for rid in np.unique(reg):
            sel = reg == rid
            xs, ys = x[sel], y[sel]
            desc = regions[rid]
            kind = desc[0]
            if kind == "far":
                ytail, s0 = desc[1], desc[2]
                yy = s0 / ys if ytail else ys
                jy = s0 / ys ** 2 if ytail else 1.0
                s = s0 - 1j * yy
                g = _rotated(s, np.cosh(xs), np.sinh(xs), params, fault)
                out[:, sel] = 2 * (-1j * s * g).real * jy
                continue
            if kind == "space":
                pt, wt = desc[1], desc[2]
                p = L / xs if pt else xs
                jp = L / xs ** 2 if pt else 1.0
                w = L / ys if wt else ys
                jw = L / ys ** 2 if wt else 1.0
                u, v = 0.5 * w, p + 0.5 * w
            else:
                inv, wmap, q0 = desc[1], desc[2], desc[3]
                p = L / xs if inv else xs
                jp = L / xs ** 2 if inv else 1.0
                wmax = q0 / p - p
                if wmap == "core":
                    w, jw = ys, 1.0
                elif wmap == "tail":
                    y0 = L / wmax
                    yv = y0 + (1.0 - y0) * ys
                    w = L / yv
                    jw = L / yv ** 2 * (1.0 - y0)
                else:
                    w, jw = wmax * ys, wmax
                u, v = p + 0.5 * w, 0.5 * w
            jac = 0.5 * jp * jw * eps * eps
            out[:, sel] = _folded(eps * u, eps * v, params, fault) * jac
        return out * scale

    return func, cells


def _integrate(params, quad, fault=None, scale=1.0):
    func, cells = _make_integrand(params, quad.L, fault, scale)
    try:
        return adaptive_cubature(func, cells, quad.rel_tol,
                                 max_cells=int(quad.max_subdivisions))
    except CubatureError as exc:
        raise CoefficientError(str(exc)) from exc


def _family_scale(params, family):
    if family == "dirac":
        return 1.0
    if family == "maxwell":
        return frozen_ratio(params.c)
    raise ValueError(f"family must be 'dirac' or 'maxwell', got {family!r}")


def coefficient_table(params, quad=None, family="dirac", check_tail=False,
                      fault=None):
    """All nine coefficients from one adaptive cubature.

    Parameters
    ----------
    params : Params
    quad : QuadratureSpec, optional
    family : {"dirac", "maxwell"}
        The Maxwell family uses the frozen Maxwell structure functions, which
        are ``frozen_ratio(c)`` times the Dirac ones.
    check_tail : bool
        Repeat the computation with ``2 L`` and require every coefficient to
        change by at most ``max(rel_tol |C|, err(L) + err(2L))``.
    fault : str, optional
        Test hook forwarded to the structure functions.

    Returns
    -------
    CoefficientTable

    Raises
    ------
    CoefficientError
        Tolerance not met within ``quad.max_subdivisions`` cells.
    TailBoundError
        The doubling check failed.
    """
    quad = quad or QuadratureSpec()
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}")
    scale = _family_scale(params, family)
    res = _integrate(params, quad, fault, scale)
    table = _to_table(res, params, quad, family)
    if not check_tail:
        return table
    res2 = _integrate(params, quad.doubled(), fault, scale)
    change = {}
    for k, name in enumerate(COEFFICIENT_NAMES):
        diff = abs(res2.value[k] - res.value[k])
        change[name] = float(diff)
        allowed = max(quad.rel_tol * abs(res.value[k]), res.error[k] + res2.error[k])
        if diff > allowed:
            raise TailBoundError(
                f"{name}: doubling L changed the value by {diff:.3e} "
                f"(allowed {allowed:.3e})")
    return CoefficientTable(table.values, table.l1, table.identities, table.parity,
                            params, quad, family, table.n_cells, change)


def _to_table(res, params, quad, family):
    values = {name: (float(res.value[k]), float(res.error[k]))
              for k, name in enumerate(COEFFICIENT_NAMES)}
    l1 = {name: float(res.l1[k]) for k, name in enumerate(COEFFICIENT_NAMES)}
    n = len(COEFFICIENT_NAMES)
    identities = {name: (float(res.value[n + k]), float(res.error[n + k]))
                  for k, name in enumerate(IDENTITY_NAMES)}
    n += len(IDENTITY_NAMES)
    parity = (float(res.value[n] + res.value[n + 1]),
              float(res.error[n] + res.error[n + 1]),
              float(res.l1[n] + res.l1[n + 1]))
    return CoefficientTable(values, l1, identities, parity, params, quad, family,
                            res.n_cells)


def coefficient(name, params, quad=None, family="dirac"):
    """Value and error estimate of a single coefficient.

    All coefficients share one cubature, so this is ``coefficient_table``
    restricted to ``name``.
    """
    if name not in COEFFICIENT_NAMES:
        raise KeyError(f"unknown coefficient {name!r}; known: {COEFFICIENT_NAMES}")
    return coefficient_table(params, quad, family).values[name]


@dataclass(frozen=True)
class AlphaResult:
    """Coupling constant from the Maxwell/Dirac coefficient ratios.

    Iterating yields ``(alpha, ratio_spread)``.

    Attributes
    ----------
    alpha : float
        Inverse of the reference ratio.
    ratio_spread : float
        Maximal relative deviation of all five ratios from the reference.
    determined_spread : float
        The same over the ratios whose Dirac coefficient is distinguishable
        from zero; a vanishing coefficient makes its ratio quadrature noise.
    ratios : dict
        ``name -> C^M / C^D`` for the five ratio coefficients.
    reference : str
        Coefficient whose ratio defines alpha: the first of ``RATIO_NAMES``
        whose Dirac value is distinguishable from zero.
    vanishing : tuple
        Ratio coefficients whose Dirac value is within its error estimate.
    """

    alpha: float
    ratio_spread: float
    ratios: dict
    reference: str
    vanishing: tuple
    determined_spread: float = 0.0

    def __iter__(self):
        return iter((self.alpha, self.ratio_spread))


def coupling_alpha(params, quad=None, dirac_table=None, maxwell_table=None):
    """Coupling constant alpha with 1/alpha = C^M / C^D.

    Parameters
    ----------
    params : Params
    quad : QuadratureSpec, optional
    dirac_table, maxwell_table : CoefficientTable, optional
        Precomputed tables; the Dirac table does not depend on ``c`` and can
        be shared across a scan in ``c``.

    Returns
    -------
    AlphaResult

    Raises
    ------
    ZeroCoefficientError
        If every Dirac ratio coefficient is indistinguishable from zero.
    """
    quad = quad or QuadratureSpec()
    if dirac_table is None:
        dirac_table = coefficient_table(params, quad, "dirac")
    if maxwell_table is None:
        maxwell_table = coefficient_table(params, quad, "maxwell")
    ratios = {name: maxwell_table.value(name) / dirac_table.value(name)
              if dirac_table.value(name) != 0 else np.nan
              for name in RATIO_NAMES}
    vanishing = tuple(n for n in RATIO_NAMES if dirac_table.vanishing(n))
    usable = [n for n in RATIO_NAMES if n not in vanishing]
    if not usable:
        raise ZeroCoefficientError("all Dirac ratio coefficients vanish")
    ref = usable[0]
    kappa = ratios[ref]
    spread = max(abs(ratios[n] / kappa - 1.0) for n in RATIO_NAMES)
    determined = max(abs(ratios[n] / kappa - 1.0) for n in usable)
    return AlphaResult(1.0 / kappa, float(spread), ratios, ref, vanishing,
                       float(determined))


def peak_kernel_square(params):
    """|T^(-1)(0, 0)|^2, the maximum of the kernel modulus."""
    return float(abs(t_family_tr(-1, 0.0, 0.0, params)) ** 2)


def epsilon_scan(eps_list, params_base, quad=None):
    """Coefficients, alpha and the peak kernel square for each eps.

    Rows are ordered by increasing eps; each row is a dict with keys ``eps``,
    the coefficient names (value), ``<name>_err``, ``alpha``,
    ``ratio_spread`` and ``peak``.
    """
    quad = quad or QuadratureSpec()
    eps_values = sorted(float(e) for e in eps_list)
    if any(not e > 0 for e in eps_values):
        raise ValueError("all eps must be positive")
    rows = []
    for eps in eps_values:
        p = Params(m=params_base.m, eps=eps, c=params_base.c)
        dirac = coefficient_table(p, quad, "dirac")
        maxwell = coefficient_table(p, quad, "maxwell")
        a = coupling_alpha(p, quad, dirac, maxwell)
        row = {"eps": eps}
        for name in COEFFICIENT_NAMES:
            row[name] = dirac.value(name)
            row[name + "_err"] = dirac.error(name)
        row["alpha"] = a.alpha
        row["ratio_spread"] = a.ratio_spread
        row["determined_spread"] = a.determined_spread
        row["peak"] = peak_kernel_square(p)
        rows.append(row)
    return rows
