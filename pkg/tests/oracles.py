"""Independent reference computations used by the tests.

Nothing here calls the closed forms under test; each oracle takes a different
route (arbitrary precision, a different integral representation, finite
differences or a dense eigensolver).
"""

import mpmath
import numpy as np
from scipy import integrate

mpmath.mp.dps = 30


def bessel_k_mp(nu, z):
    """K_nu(z) in 30-digit arithmetic."""
    return complex(mpmath.besselk(nu, mpmath.mpc(z.real, z.imag)))


def bessel_k_integral(nu, x):
    """K_nu(x) for real x > 0 from int_0^inf exp(-x cosh u) cosh(nu u) du."""
    # the integrand is below 1e-300 once x cosh(u) > 700
    upper = np.arccosh(max(700.0 / x, 1.0)) + 1.0
    val, _ = integrate.quad(lambda u: np.exp(-x * np.cosh(u)) * np.cosh(nu * u),
                            0, upper, epsabs=0, epsrel=1e-13, limit=200)
    return val


def t_family_mp(n, t, r, m, eps):
    """T^(n) from mpmath: m^2/(8 pi^3) K_1(z)/z for n = 0, and the ladder
    prefactor (-1/2)^n m^(2-2n) z^(n-1) K_|1-n| / (8 pi^3) otherwise."""
    z = m * mpmath.sqrt(mpmath.mpf(r) ** 2 - mpmath.mpc(t, -eps) ** 2)
    pref = mpmath.mpf(-0.5) ** n * mpmath.mpf(m) ** (2 - 2 * n) / (8 * mpmath.pi ** 3)
    return complex(pref * z ** (n - 1) * mpmath.besselk(abs(1 - n), z))


def greedy_pairing_error(expected, found):
    """Match each expected value to its nearest unused found value.

    Returns the largest relative mismatch.
    """
    left = list(found)
    worst = 0.0
    scale = max(np.abs(found).max(), np.finfo(float).tiny)
    for e in expected:
        j = int(np.argmin([abs(e - f) for f in left]))
        worst = max(worst, abs(e - left.pop(j)) / scale)
    return worst


def loglog_slope(xs, ys):
    """Least-squares slope of log(ys) against log(xs)."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])


def central_difference(f, x, k, h):
    """Central first derivative of ``f`` along coordinate ``k``."""
    e = np.zeros(len(x))
    e[k] = h
    return (f(x + e) - f(x - e)) / (2 * h)


def dirac_currents(phi):
    """Vector and axial currents phi_bar gamma^mu phi, phi_bar g5 gamma^mu phi,
    built from explicit Dirac-representation gamma matrices."""
    s = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]),
         np.array([[1, 0], [0, -1]])]
    i2, z2 = np.eye(2), np.zeros((2, 2))
    g = [np.block([[i2, z2], [z2, -i2]])] + [np.block([[z2, si], [-si, z2]]) for si in s]
    g5 = np.block([[z2, i2], [i2, z2]])
    bar = phi.conj() @ g[0]
    jv = np.array([bar @ g[mu] @ phi for mu in range(4)])
    ja = np.array([bar @ g5 @ g[mu] @ phi for mu in range(4)])
    return jv, ja


def real_axis_box(params, R, components=(1, 3), rel_tol=1e-9):
    """Coefficient integrals over the real box 0 <= t, r <= R.

    Uses the pointwise folded integrand on the real (t, r) plane only, in
    light-cone coordinates with a logarithmic map of the distance to the cone.
    No contour rotation, no tail map; the box must be large enough that the
    slowly oscillating timelike tail has died out (R = 800 for m eps = 0.1).
    """
    from artifact.coeffs import _folded
    from artifact.quadrature import adaptive_cubature

    eps = params.eps
    comps = list(components)

    def func(x, y, reg):
        out = np.zeros((len(comps),) + x.shape)
        for rid in (0, 1):
            sel = reg == rid
            if not sel.any():
                continue
            a, u = x[sel], y[sel]
            lg = np.log1p((R - a) / eps)
            p = eps * np.expm1(u * lg)
            jac = (p + eps) * lg
            t, r = (a, a + p) if rid == 0 else (a + p, a)
            out[:, sel] = _folded(t, r, params, None)[comps] * jac
        return out

    edges = np.concatenate([[0.0], np.geomspace(eps / 100, R, 60)])
    ys = np.linspace(0.0, 1.0, 21)
    cells = [(a, b, c, d, rid) for rid in (0, 1)
             for a, b in zip(edges[:-1], edges[1:]) for c, d in zip(ys[:-1], ys[1:])]
    res = adaptive_cubature(func, cells, rel_tol, max_cells=400000)
    return res.value, res.error
