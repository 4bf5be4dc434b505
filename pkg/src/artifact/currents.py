"""Dirac and Maxwell structure functions and the perturbed closed chain.

The structure functions f_s (even under t -> -t) and f_a (odd) multiply the
local currents in the first-order variation of the closed chain,

    f_s = |T|^2 (2 eps r^2 Re T - q Im(T xi0)) / (32 pi),
    f_a = |T|^2 (2 eps r Re(T xi0) - q r Im T) / (32 pi),

with T = T^(-1), xi0 = t - i eps and q = t^2 + eps^2 - r^2.
"""

from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

from .besselt import RegularizedXi, t_family_scaled_tr
from .chain import continuum_spectral, fermionic_projector
from .clifford import GAMMA5, big_gamma, gamma, spin_adjoint
from .lightcone import dirac_perturbation

__all__ = [
    "FAULTS", "SpinorValue", "StructureFunctionSample", "CurrentsError",
    "dirac_structure_functions", "maxwell_structure_functions",
    "structure_brackets", "frozen_ratio", "perturbed_chain", "trace_kernel",
    "extract_structure_functions", "MomentEntry", "Moment", "assemble_moment",
    "moment_matrix", "CancellationReport", "verify_cancellation",
]

FAULTS = ("fa_sign",)
SYMMETRY_TOL = 1e-9


class CurrentsError(ValueError):
    """Invalid input: r = 0, asymmetric perturbation, unsupported moment."""


@dataclass(frozen=True)
class SpinorValue:
    """Constant spinor with its vector and axial Dirac currents.

    ``j_v[mu] = phi_bar gamma^mu phi`` and ``j_a[mu] = phi_bar g5 gamma^mu phi``
    (upper index).
    """

    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=complex)
        if phi.shape != (4,):
            raise ValueError("a spinor has four components")
        phi.setflags(write=False)
        object.__setattr__(self, "phi", phi)

    @property
    def bar(self):
        return self.phi.conj() @ gamma(0)

    @property
    def j_v(self):
        return np.array([(self.bar @ gamma(mu) @ self.phi).real for mu in range(4)])

    @property
    def j_a(self):
        return np.array([(self.bar @ GAMMA5 @ gamma(mu) @ self.phi).real
                         for mu in range(4)])


@dataclass(frozen=True)
class StructureFunctionSample:
    """Structure functions at (t, r); unpacks as ``f_s, f_a``."""

    t: object
    r: object
    f_s: object
    f_a: object

    def __iter__(self):
        return iter((self.f_s, self.f_a))


def _check_fault(fault):
    if fault is not None and fault not in FAULTS:
        raise ValueError(f"unknown fault {fault!r}; known: {FAULTS}")


def _kernel(t, r, params):
    ts, z = t_family_scaled_tr(-1, t, r, params)
    return ts * np.exp(-z)


def structure_brackets(t, r, params):
    """Return ``(|T|^2, F_s, F_a)`` so that ``f = |T|^2 F / (32 pi)``."""
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    eps = params.eps
    T = _kernel(t, r, params)
    tau = t - 1j * eps
    q = t * t + eps * eps - r * r
    fs = 2 * eps * r * r * T.real - q * (T * tau).imag
    fa = 2 * eps * r * (T * tau).real - q * r * T.imag
    return np.abs(T) ** 2, fs, fa


def _check_r(r):
    if np.any(np.asarray(r) <= 0):
        raise CurrentsError("structure functions need r > 0")


def dirac_structure_functions(t, r, params, fault=None):
    """Closed-form Dirac structure functions.

    Parameters
    ----------
    t, r : float or array_like
        Time difference and spatial radius.
    params : Params
    fault : str, optional
        Test hook; ``"fa_sign"`` flips the sign of ``f_a`` for ``t < 0`` so
        that its time-flip parity is broken.

    Returns
    -------
    StructureFunctionSample
        Unpacks as ``f_s, f_a``.

    Raises
    ------
    CurrentsError
        If any ``r <= 0``.
    """
    _check_fault(fault)
    _check_r(r)
    absT2, fs, fa = structure_brackets(t, r, params)
    f_s = absT2 * fs / (32 * np.pi)
    f_a = absT2 * fa / (32 * np.pi)
    if fault == "fa_sign":
        f_a = np.where(np.asarray(t) < 0, -f_a, f_a)
    return StructureFunctionSample(t, r, f_s, f_a)


def frozen_ratio(c):
    """Maxwell/Dirac proportionality constant of the frozen structure functions.

    Freezing z^2 T^(0) at its coincidence value m^2/(8 pi^3) and T^(1) at the
    real constant ``c`` makes the Maxwell structure functions a multiple of the
    Dirac ones, ``1/(192 pi^2) - (2 pi/3) c``.
    """
    return 1.0 / (192 * np.pi ** 2) - 2 * np.pi / 3 * c


def maxwell_structure_functions(t, r, params, mode="frozen", fault=None):
    """Maxwell structure functions from the vector-potential perturbation.

    The unfrozen forms are

        f_s = -|T|^2/48 (2 eps r^2 Re[conj(T1) T] - q Im[conj(T1) T xi0])
              - |lam|^2/48 Im[(T0/T) xi0],
        f_a = -|T|^2/48 (2 eps r Re[conj(T1) T xi0] - r q Im[conj(T1) T])
              - |lam|^2/48 r Im[T0/T],

    with T = T^(-1), T0 = T^(0), T1 = T^(1) and |lam| the modulus of the
    continuum eigenvalues. In ``"frozen"`` mode T1 is replaced by the constant
    ``params.c`` and the |lam|^2 terms are rewritten with z^2 T0 frozen at its
    coincidence value m^2 / (8 pi^3); the result is ``frozen_ratio(c)`` times
    the Dirac structure functions. ``"exact"`` mode keeps T0 and T1 as they
    are and exists only to measure the size of that approximation.

    Raises
    ------
    CurrentsError
        If any ``r <= 0``.
    """
    if mode not in ("frozen", "exact"):
        raise ValueError("mode must be 'frozen' or 'exact'")
    _check_fault(fault)
    _check_r(r)
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    eps, m = params.eps, params.m
    T = _kernel(t, r, params)
    tau = t - 1j * eps
    q = t * t + eps * eps - r * r
    absT2 = np.abs(T) ** 2
    if mode == "frozen":
        t1 = params.c
        frozen = m * m / (8 * np.pi ** 3)
        # |lam|^2 Im[(T0/T) xi0] = -|T|^2/(16 m^2) (2 eps r^2 Re[conj(z^2 T0) T] - q Im[...])
        lam_s = -absT2 / (16 * m * m) * frozen * (
            2 * eps * r * r * T.real - q * (T * tau).imag)
        lam_a = -absT2 / (16 * m * m) * frozen * (
            2 * eps * r * (T * tau).real - q * r * T.imag)
    else:
        ts1, z = t_family_scaled_tr(1, t, r, params)
        t1 = ts1 * np.exp(-z)
        ts0, _ = t_family_scaled_tr(0, t, r, params)
        ratio = ts0 / t_family_scaled_tr(-1, t, r, params)[0]
        lam2 = (absT2 / 4) ** 2 * (q * q + 4 * eps * eps * r * r)
        lam_s = lam2 * (ratio * tau).imag
        lam_a = lam2 * r * ratio.imag
    c1 = np.conj(t1) * T
    f_s = -absT2 / 48 * (2 * eps * r * r * c1.real - q * (c1 * tau).imag) - lam_s / 48
    f_a = -absT2 / 48 * (2 * eps * r * (c1 * tau).real - q * r * c1.imag) - lam_a / 48
    if fault == "fa_sign":
        f_a = np.where(t < 0, -f_a, f_a)
    return StructureFunctionSample(t, r, f_s, f_a)


def _symmetric_within(a, b, tol):
    scale = max(np.abs(a).max(), np.abs(b).max(), np.finfo(float).tiny)
    return np.abs(a - b).max() <= tol * scale


def perturbed_chain(xi, P, dP, dP_rev):
    """First variation of the closed chain, P(x,y) dP(y,x) + dP(x,y) P(y,x).

    ``P(y, x)`` is obtained as the spin adjoint of ``P``.

    Raises
    ------
    CurrentsError
        If ``dP_rev`` differs from ``spin_adjoint(dP)`` by more than 1e-9.
    """
    P = np.asarray(P, dtype=complex)
    dP = np.asarray(dP, dtype=complex)
    dP_rev = np.asarray(dP_rev, dtype=complex)
    if not _symmetric_within(spin_adjoint(dP), dP_rev, SYMMETRY_TOL):
        raise CurrentsError("perturbation is not spin-symmetric")
    return P @ dP_rev + dP @ spin_adjoint(P)


def trace_kernel(spec, which, dA):
    """Re tr[conj(lambda_s) Lambda_(s, chirality) dA].

    Parameters
    ----------
    spec : SpectralData
    which : tuple
        ``(s, chirality)`` with ``s`` in ``(+1, -1)`` and chirality ``"L"`` or
        ``"R"``.
    dA : ndarray, shape (4, 4)
    """
    s, _ = which
    lam = spec.eigenvalue(s)
    return float(np.real(np.trace(np.conj(lam) * spec.projectors[which] @ dA)))


_CHIRALITY_SIGN = {"L": -1, "R": 1}
# four fixed generic spinors; any linearly independent current rows will do
_PROBES = np.array([
    [1.0, 0.3 + 0.2j, -0.5j, 0.7],
    [0.2j, 1.0, 0.4, -0.3 + 0.6j],
    [0.5, -0.4j, 1.0 + 0.1j, 0.2],
    [-0.3, 0.6, 0.25j, 1.0 - 0.5j],
])


def extract_structure_functions(t, r, params, direction=(0.0, 0.0, 1.0),
                                spinors=None):
    """Recover (f_s, f_a) from trace kernels of the Dirac perturbation.

    For each spectral projector the trace kernel is linear in the four
    currents (j_v^0, j_v^r, j_a^r, j_a^0). Probing with four spinors gives a
    4x4 linear system per projector whose solution must be
    ``(f_s, f_a, s chi f_s, s chi f_a)``.

    Returns
    -------
    sample : StructureFunctionSample
        Taken from the ``(+1, "R")`` projector.
    inconsistency : float
        Largest deviation of the other projectors' solutions from the pattern
        above, relative to ``max(|f_s|, |f_a|)``.
    """
    xi = RegularizedXi.from_tr(t, r, params.eps, direction)
    spinors = _PROBES if spinors is None else np.asarray(spinors, dtype=complex)
    spec = continuum_spectral(xi, params)
    P = fermionic_projector(xi, params, massless=True)
    n = xi.direction
    rows, kernels = [], {k: [] for k in spec.projectors}
    for phi in spinors:
        sv = SpinorValue(phi)
        jv, ja = sv.j_v, sv.j_a
        # spatial lower xi over r is -n
        rows.append([jv[0], -n @ jv[1:], -n @ ja[1:], ja[0]])
        dP = dirac_perturbation(sv, params)
        dA = perturbed_chain(xi, P, dP, spin_adjoint(dP))
        for key in spec.projectors:
            kernels[key].append(trace_kernel(spec, key, dA))
    rows = np.array(rows)
    sol = {k: np.linalg.solve(rows, np.array(v)) for k, v in kernels.items()}
    f_s, f_a = sol[(1, "R")][:2]
    scale = max(abs(f_s), abs(f_a))
    worst = 0.0
    for (s, chir), v in sol.items():
        sign = s * _CHIRALITY_SIGN[chir]
        want = np.array([f_s, f_a, sign * f_s, sign * f_a])
        worst = max(worst, np.abs(v - want).max() / scale)
    return StructureFunctionSample(t, r, f_s, f_a), worst


# ---------------------------------------------------------------------------
# current moments

PERTURBATIONS = ("dirac", "axial_maxwell", "vector_maxwell")
BASIS_NAMES = ("1", "g5", "G^k", "g5 G^k")
ZEROTH_ORDER_NOTE = (
    "two-sector zeroth moment uses (5i/6) C0 for the pseudo-bilinear term; "
    "an alternative normalization quotes (5i/2) C0")


@dataclass(frozen=True)
class MomentEntry:
    """One term ``coefficient * current * basis`` of a current moment.

    ``current`` is ``(kind, index)`` with kind ``"v"`` (vector) or ``"a"``
    (axial) and index ``"0"`` or ``"k"``. A ``"k"`` in the current or in the
    basis name is summed over k = 1..3, except in first moments with spatial
    ``mu`` where it is fixed to ``mu``.
    """

    basis: str
    current: tuple
    coefficient: complex


@dataclass(frozen=True)
class Moment:
    order: int
    mu: int
    perturbation: str
    sectors: int
    entries: tuple
    notes: tuple = field(default_factory=tuple)


def _axial_entries(order, mu, C):
    if order == 0:
        return [("g5 G^k", ("a", "k"), 1j / 3 * C["C0"])]
    if mu == 0:
        return [("g5", ("a", "0"), 1j * C["Ct_PS"]),
                ("g5 G^k", ("a", "k"), C["Ct_PB"])]
    return [("g5", ("a", "k"), 1j * C["Cr_PS"]),
            ("g5 G^k", ("a", "0"), C["Cr_PB"])]


def _vector_entries(order, mu, C):
    if order == 0:
        return [("1", ("v", "0"), 2 * C["C0"])]
    if mu == 0:
        return [("1", ("v", "0"), 1j * C["Ct_S"]),
                ("G^k", ("v", "k"), C["Ct_B"])]
    return [("1", ("v", "k"), 1j * C["Cr_S"]),
            ("G^k", ("v", "0"), C["Cr_B"])]


def assemble_moment(order, mu, perturbation, sectors, table):
    """Operator-valued current moment as labelled entries.

    Parameters
    ----------
    order : {0, 1}
        Zeroth moment or first moment in direction ``mu``.
    mu : int
        Ignored for ``order == 0``.
    perturbation : {"dirac", "axial_maxwell", "vector_maxwell"}
    sectors : {1, 2}
        With two sectors the perturbation acts on one of them; the vector
        entries appear and the axial ones are scaled by 5/2.
    table : CoefficientTable or mapping
        Coefficients of the family matching ``perturbation``.

    Returns
    -------
    Moment

    Raises
    ------
    CurrentsError
        For unsupported combinations (``vector_maxwell`` with one sector).
    """
    if order not in (0, 1):
        raise CurrentsError("order must be 0 or 1")
    if order == 1 and mu not in (0, 1, 2, 3):
        raise CurrentsError("mu must be 0..3")
    if perturbation not in PERTURBATIONS or sectors not in (1, 2):
        raise CurrentsError(f"unsupported moment {perturbation!r}, {sectors} sectors")
    if perturbation == "vector_maxwell" and sectors == 1:
        raise CurrentsError("a vector potential has no one-sector moment")
    if order == 0:
        mu = 0
    if isinstance(table, Mapping):
        C = {k: float(v) for k, v in table.items()}
    else:
        C = {k: table.value(k) for k in table.values}
    entries = []
    axial_scale = 1.0 if sectors == 1 else 2.5
    if perturbation in ("dirac", "axial_maxwell"):
        entries += [(b, c, axial_scale * v) for b, c, v in _axial_entries(order, mu, C)]
    if sectors == 2 and perturbation in ("dirac", "vector_maxwell"):
        entries += _vector_entries(order, mu, C)
    notes = (ZEROTH_ORDER_NOTE,) if sectors == 2 and order == 0 else ()
    return Moment(order, mu, perturbation, sectors,
                  tuple(MomentEntry(b, c, complex(v)) for b, c, v in entries), notes)


def _basis_matrix(name, k):
    if name == "1":
        return np.eye(4, dtype=complex)
    if name == "g5":
        return GAMMA5
    if name == "G^k":
        return big_gamma(k)
    return GAMMA5 @ big_gamma(k)


def moment_matrix(moment, currents):
    """Evaluate a moment for given currents.

    Parameters
    ----------
    moment : Moment
    currents : mapping
        ``{"v": j_v, "a": j_a}``, upper-index 4-vectors; missing kinds are 0.
    """
    out = np.zeros((4, 4), dtype=complex)
    spatial = moment.order == 1 and moment.mu != 0
    for e in moment.entries:
        kind, index = e.current
        j = np.asarray(currents.get(kind, np.zeros(4)), dtype=float)
        has_k = index == "k" or "k" in e.basis
        ks = [moment.mu] if spatial else ([1, 2, 3] if has_k else [1])
        for k in ks:
            val = j[k] if index == "k" else j[0]
            out += e.coefficient * val * _basis_matrix(e.basis, k)
    return out


@dataclass(frozen=True)
class CancellationReport:
    """Residuals of the combined Dirac and Maxwell moments.

    Each row is ``(label, dirac_norm, maxwell_norm, combined_norm,
    uncertainty, relative, raw_relative)``. ``relative`` divides the combined
    norm by the largest of the two individual norms and the quadrature
    uncertainty of the moment (coefficients replaced by their error
    estimates); ``raw_relative`` omits the uncertainty.
    """

    rows: tuple
    alpha: float
    sectors: int

    @property
    def max_relative(self):
        return max((row[5] for row in self.rows), default=0.0)

    def passed(self, tol=1e-6):
        return self.max_relative <= tol


def _moment_labels():
    yield 0, 0, "order0"
    for mu in range(4):
        yield 1, mu, f"order1_mu{mu}"


def _error_table(table):
    return {k: abs(table.error(k)) for k in table.values}


def verify_cancellation(phi, params, alpha, dirac_table=None, maxwell_table=None,
                        sectors=1, quad=None, point=(0.0, 0.0, 0.0, 0.0)):
    """Check that matched Dirac and Maxwell perturbations have vanishing moments.

    The Maxwell partner is a quadratic potential whose current d^nu F_{nu mu}
    equals ``-alpha`` times the Dirac current, axial for one sector and vector
    plus axial for two sectors. With the coupling ``alpha = C^D / C^M`` the
    combined moments vanish. By linearity a coupling off by a factor ``s``
    leaves ``|1 - s| / max(1, s)`` of the larger single moment, i.e. one half
    for ``s = 2`` and ``s = 1/2``.

    Parameters
    ----------
    phi : SpinorValue or array_like
    params : Params
    alpha : float
    dirac_table, maxwell_table : CoefficientTable, optional
        Computed with ``quad`` when omitted.
    sectors : {1, 2}
    point : array_like
        Where the potential's current is evaluated (it is constant).

    Returns
    -------
    CancellationReport
    """
    from .coeffs import coefficient_table
    from .lightcone import PolynomialPotential

    sv = phi if isinstance(phi, SpinorValue) else SpinorValue(phi)
    if dirac_table is None:
        dirac_table = coefficient_table(params, quad, family="dirac")
    if maxwell_table is None:
        maxwell_table = coefficient_table(params, quad, family="maxwell")
    eta = np.array([1.0, -1.0, -1.0, -1.0])
    pt = np.asarray(point, dtype=float)

    def maxwell_current(j_upper):
        pot = PolynomialPotential.with_current(eta * (-alpha * j_upper))
        return eta * pot.current(pt)

    dirac_cur = {"v": sv.j_v, "a": sv.j_a}
    maxwell_cur = {"a": maxwell_current(sv.j_a)}
    kinds = ["axial_maxwell"]
    if sectors == 2:
        maxwell_cur["v"] = maxwell_current(sv.j_v)
        kinds.append("vector_maxwell")
    err_d, err_m = _error_table(dirac_table), _error_table(maxwell_table)
    abs_cur_d = {k: np.abs(v) for k, v in dirac_cur.items()}
    abs_cur_m = {k: np.abs(v) for k, v in maxwell_cur.items()}
    rows = []
    for order, mu, label in _moment_labels():
        md = assemble_moment(order, mu, "dirac", sectors, dirac_table)
        mm = [assemble_moment(order, mu, k, sectors, maxwell_table) for k in kinds]
        d_mat = moment_matrix(md, dirac_cur)
        m_mat = sum(moment_matrix(m, maxwell_cur) for m in mm)
        unc = np.linalg.norm(moment_matrix(
            assemble_moment(order, mu, "dirac", sectors, err_d), abs_cur_d))
        unc += sum(np.linalg.norm(moment_matrix(
            assemble_moment(order, mu, k, sectors, err_m), abs_cur_m)) for k in kinds)
        nd, nm = np.linalg.norm(d_mat), np.linalg.norm(m_mat)
        comb = np.linalg.norm(d_mat + m_mat)
        ref = max(nd, nm)
        rel = comb / max(ref, unc) if comb > 0 else 0.0
        raw = comb / ref if comb > 0 else 0.0
        rows.append((label, float(nd), float(nm), float(comb), float(unc),
                     float(rel), float(raw)))
    return CancellationReport(tuple(rows), float(alpha), sectors)
