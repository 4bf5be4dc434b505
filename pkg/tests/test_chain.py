import numpy as np
import pytest

from artifact.besselt import Params, RegularizedXi, momentum_oracle_matrix, t_family
from artifact.chain import (ChainComponents, ChainError, chain_components,
                            closed_chain, continuum_eigenvalues, continuum_spectral,
                            direct_eigenvalues, eigenvalues_closed_form,
                            fermionic_projector, projector_derivative,
                            projectors_exact)
from artifact.clifford import (CHI_L, CHI_R, IDENTITY, big_gamma, decompose,
                               gamma, gamma_lower, spin_adjoint)

from oracles import greedy_pairing_error, loglog_slope

P = Params(1.0, 0.1)
EPS = P.eps


def _random_points(rng, count, scale=10 * EPS):
    for _ in range(count):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        yield RegularizedXi.from_tr(rng.uniform(-scale, scale), rng.uniform(1e-3, scale),
                                    EPS, n)


def test_massless_projector_has_no_scalar_part():
    xi = RegularizedXi.from_tr(0.1, 0.2, EPS)
    assert decompose(fermionic_projector(xi, P, massless=True)).scalar == 0


def test_projector_adjoint_symmetry():
    rng = np.random.default_rng(30)
    for xi in _random_points(rng, 50):
        p = fermionic_projector(xi, P)
        diff = spin_adjoint(p) - fermionic_projector(xi.reversed(), P)
        assert np.abs(diff).max() <= 1e-12 * np.abs(p).max()


def test_projector_vs_momentum_oracle():
    xi = RegularizedXi.from_tr(0.17, 0.26, EPS, (0.0, 0.6, 0.8))
    p = fermionic_projector(xi, P)
    ref = momentum_oracle_matrix(xi, P)
    assert np.abs(p - ref).max() <= 1e-6 * np.abs(ref).max()


def test_closed_chain_spin_symmetric():
    rng = np.random.default_rng(31)
    for xi in _random_points(rng, 50):
        a = closed_chain(xi, P)
        assert np.abs(spin_adjoint(a) - a).max() <= 1e-12 * np.abs(a).max()


def test_chain_real_spectrum_at_t_zero():
    xi = RegularizedXi.from_tr(0.0, 0.25, EPS, (1.0, 0.0, 0.0))
    w = direct_eigenvalues(closed_chain(xi, P))
    # t = 0 makes every kernel real, but Gamma^i is anti-Hermitian: the chain
    # has real coefficients and its spectrum is a conjugate pair; with r
    # large compared to eps the pair approaches the real axis only if c ~ 0
    comp = chain_components(closed_chain(xi, P))
    assert comp.residual <= 1e-12
    assert np.abs(w.imag).max() <= np.abs(comp.c).max() * 1.000001


def test_components_closed_forms():
    rng = np.random.default_rng(32)
    for xi in _random_points(rng, 20, scale=3 * EPS):
        comp = chain_components(closed_chain(xi, P))
        tm1, t0 = t_family(-1, xi, P), t_family(0, xi, P)
        b = 0.25 * abs(tm1) ** 2 * np.dot(xi.lower, np.conj(xi.upper)).real \
            + P.m ** 2 * abs(t0) ** 2
        assert comp.b == pytest.approx(b, rel=1e-12)
        c = -0.5 * abs(tm1) ** 2 * EPS * xi.lower[1:].real
        assert np.allclose(comp.c, c, rtol=1e-10, atol=1e-12 * abs(b))
        assert comp.residual <= 1e-12


def test_coincident_points():
    xi = RegularizedXi.from_tr(0.0, 0.0, EPS)
    comp = chain_components(closed_chain(xi, P))
    assert np.abs(comp.a[1:]).max() <= 1e-12 * abs(comp.b)
    assert np.abs(comp.c).max() == 0
    # the mass term leaves a_0 = m eps T^(0) T^(-1), real at coincidence
    expected = P.m * EPS * (t_family(0, xi, P) * t_family(-1, xi, P)).real
    assert comp.a[0] == pytest.approx(expected, rel=1e-12)
    massless = chain_components(closed_chain(xi, P, massless=True))
    assert np.abs(massless.a).max() <= 1e-12 * abs(massless.b)
    lp, lm = eigenvalues_closed_form(massless)
    assert lp == pytest.approx(massless.b, rel=1e-12)
    assert lm == pytest.approx(massless.b, rel=1e-12)


def test_a_is_third_order_in_eps():
    eps = np.geomspace(0.01, 0.1, 6)
    mags = []
    for e in eps:
        xi = RegularizedXi.from_tr(0.5 * e, 1.5 * e, e, (0.6, 0.0, 0.8))
        p = Params(1.0, e)
        comp = chain_components(closed_chain(xi, p))
        mags.append(np.linalg.norm(comp.a) / abs(t_family(-1, xi, p)) ** 2)
    assert abs(loglog_slope(eps, mags) - 3.0) <= 0.1


def test_chain_components_rejects_asymmetric():
    with pytest.raises(ChainError):
        chain_components(gamma(0) @ gamma(1))


def test_scalar_chain_eigenvalues():
    comp = ChainComponents(2.5, np.zeros(4), np.zeros(3))
    assert eigenvalues_closed_form(comp) == (2.5, 2.5)


def test_discriminant_trace_identity():
    rng = np.random.default_rng(33)
    for xi in _random_points(rng, 50):
        a = closed_chain(xi, P)
        comp = chain_components(a)
        shifted = a - comp.b * IDENTITY
        quarter_tr = np.trace(shifted @ shifted) / 4
        # a_mu a^mu + 2 c_{mu nu} c^{mu nu} with c_{0i} = c_i / 2
        a_up = comp.a * np.array([1, -1, -1, -1])
        rhs = np.dot(comp.a, a_up) + 2 * 2 * np.sum(-(comp.c / 2) ** 2)
        assert abs(quarter_tr - rhs) <= 1e-11 * max(abs(quarter_tr), comp.b ** 2 * 1e-6)
        assert rhs == pytest.approx(comp.discriminant(), rel=1e-12)


def test_closed_form_eigenvalues_vs_dense_solver():
    rng = np.random.default_rng(34)
    for xi in _random_points(rng, 200):
        a = closed_chain(xi, P)
        lp, lm = eigenvalues_closed_form(chain_components(a))
        assert greedy_pairing_error([lp, lp, lm, lm], direct_eigenvalues(a)) <= 1e-10


def test_continuum_pair_at_t_zero():
    xi = RegularizedXi.from_tr(0.0, EPS, EPS)
    p = Params(0.01, EPS)
    lp, lm = eigenvalues_closed_form(chain_components(closed_chain(xi, p)))
    expected = 0.5j * abs(t_family(-1, xi, p)) ** 2 * EPS * EPS
    assert abs(lp - expected) <= 1e-3 * abs(expected)
    assert abs(lm - np.conj(expected)) <= 1e-3 * abs(expected)


def test_exact_projectors_idempotent_and_complementary():
    rng = np.random.default_rng(35)
    for xi in _random_points(rng, 50, scale=3 * EPS):
        a = closed_chain(xi, P)
        comp = chain_components(a)
        # continuum components: drop a_mu
        cont = ChainComponents(comp.b, np.zeros(4), comp.c)
        a_cont = comp.b * IDENTITY + sum(comp.c[i] * big_gamma(i + 1) for i in range(3))
        lp, lm, _ = projectors_exact(a_cont, cont)
        assert np.abs(lp @ lp - lp).max() <= 1e-10
        assert np.abs(lp @ lm).max() <= 1e-10
        assert np.array_equal(lp + lm, IDENTITY)
        # the full chain: the spatial part of a_mu is parallel to c, so the
        # cross terms cancel and the formula stays idempotent
        _, _, info = projectors_exact(a, comp)
        assert info["idempotency"] <= 1e-12
        assert info["eigen_residual"] <= 1e-12


def test_exact_projector_idempotency_over_eps_sweep():
    for e in np.geomspace(0.01, 0.1, 6):
        xi = RegularizedXi.from_tr(0.5 * e, 1.5 * e, e, (0.6, 0.0, 0.8))
        a = closed_chain(xi, Params(1.0, e))
        _, _, info = projectors_exact(a, chain_components(a))
        assert info["idempotency"] <= 1e-12


def test_exact_projectors_degenerate():
    comp = ChainComponents(1.0, np.zeros(4), np.zeros(3))
    with pytest.raises(ChainError):
        projectors_exact(IDENTITY, comp)


def test_continuum_spectral_algebra():
    rng = np.random.default_rng(36)
    for xi in _random_points(rng, 20):
        spec = continuum_spectral(xi, P)
        projs = spec.projectors
        total = sum(projs.values())
        assert np.abs(total - IDENTITY).max() <= 1e-12
        for key, lam in projs.items():
            assert abs(np.trace(lam) - 1) <= 1e-12
            assert np.abs(lam @ lam - lam).max() <= 1e-12
            for other_key, other in projs.items():
                if other_key != key:
                    assert np.abs(lam @ other).max() <= 1e-12
        n_op = sum(xi.lower[k].real * big_gamma(k) for k in (1, 2, 3)) / xi.r
        for s in (1, -1):
            half = 0.5 * IDENTITY + 0.5j * s * n_op
            for chi in (CHI_L, CHI_R):
                assert np.abs(chi @ half - half @ chi).max() <= 1e-13
        assert abs(abs(spec.lambda_plus) - abs(spec.lambda_minus)) <= 1e-10 * abs(spec.lambda_plus)
        assert abs(spec.lambda_minus - np.conj(spec.lambda_plus)) <= 1e-10 * abs(spec.lambda_plus)


def test_continuum_spectral_rejects_r_zero():
    with pytest.raises(ChainError):
        continuum_spectral(RegularizedXi.from_tr(0.1, 0.0, EPS), P)


def test_continuum_eigenvalue_formula():
    xi = RegularizedXi.from_tr(0.03, 0.07, EPS)
    lp, lm = continuum_eigenvalues(xi, P)
    w = abs(t_family(-1, xi, P)) ** 2 / 4
    q = 0.03 ** 2 - 0.07 ** 2 + EPS ** 2
    assert lp == pytest.approx(w * (q + 2j * EPS * 0.07), rel=1e-14)
    assert lm == pytest.approx(np.conj(lp), rel=1e-14)


def _p_yx(xi0, xs):
    # P(y, x) as a function of the upper displacement y - x
    return fermionic_projector(RegularizedXi(xi0, xs).reversed(), P, massless=True)


def _fd_derivative(mu, xi, h):
    e = np.zeros(4)
    e[mu] = h
    # moving x by +h e_mu moves xi = y - x by -h e_mu
    plus = _p_yx(xi.xi0 - e[0], xi.xi_spatial - e[1:])
    minus = _p_yx(xi.xi0 + e[0], xi.xi_spatial + e[1:])
    return (plus - minus) / (2 * h)


# spacelike points a few eps away from the light cone: the central-difference
# error grows like (h / |xi|)^2 towards it
FD_POINTS = [(0.2, 0.5, (0.0, 0.0, 1.0)), (-0.1, 0.4, (0.6, 0.0, 0.8)),
             (0.3, 0.6, (0.0, 1.0, 0.0)), (0.0, 0.3, (0.36, 0.48, 0.8))]


@pytest.mark.parametrize("point", FD_POINTS)
def test_projector_derivative_finite_difference(point):
    t, r, d = point
    xi = RegularizedXi.from_tr(t, r, EPS, d)
    for mu in range(4):
        exact = projector_derivative(mu, xi, P)
        fd = _fd_derivative(mu, xi, EPS / 50)
        assert np.abs(fd - exact).max() <= 1e-4 * np.abs(exact).max()


def test_projector_derivative_second_order():
    xi = RegularizedXi.from_tr(0.1, 0.3, EPS, (0.0, 0.6, 0.8))
    hs = [EPS / 20, EPS / 40, EPS / 80]
    exact = projector_derivative(1, xi, P)
    errs = [np.abs(_fd_derivative(1, xi, h) - exact).max() for h in hs]
    assert abs(loglog_slope(hs, errs) - 2.0) <= 0.1


def test_projector_derivative_gamma_term():
    xi = RegularizedXi.from_tr(0.1, 0.2, EPS)
    rev = xi.reversed()
    tb1, tb2 = t_family(-1, rev, P), t_family(-2, rev, P)
    first = np.conj(xi.lower[0]) / 2 * tb2 / tb1 * fermionic_projector(rev, P, massless=True)
    rest = projector_derivative(0, xi, P) - first
    assert np.abs(rest - 0.5j * tb1 * gamma_lower(0)).max() <= 1e-13 * abs(tb1)


def test_projector_derivative_adjoint_consistency():
    # the adjoint of d^x P(y, x) is d^x P(x, y), checked by finite differences
    xi = RegularizedXi.from_tr(0.15, 0.4, EPS, (0.0, 0.0, 1.0))
    h = EPS / 100
    for mu in range(4):
        e = np.zeros(4)
        e[mu] = h
        f = lambda s: fermionic_projector(RegularizedXi(xi.xi0 - s * e[0],
                                                        xi.xi_spatial - s * e[1:]),
                                          P, massless=True)
        fd = (f(1) - f(-1)) / (2 * h)
        adj = spin_adjoint(projector_derivative(mu, xi, P))
        assert np.abs(adj - fd).max() <= 1e-4 * np.abs(fd).max()


def test_projector_derivative_rejects():
    with pytest.raises(ChainError):
        projector_derivative(0, RegularizedXi.from_tr(0.1, 0.0, EPS), P)
    with pytest.raises(IndexError):
        projector_derivative(4, RegularizedXi.from_tr(0.1, 0.1, EPS), P)
