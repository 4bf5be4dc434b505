"""Dirac algebra in signature (+, -, -, -).

Spin matrices are plain ``(4, 4)`` complex numpy arrays. The standard Dirac
representation is used throughout; downstream code only consumes traces and
basis coefficients, which do not depend on that choice.
"""

from dataclasses import dataclass, field

import numpy as np

ETA = np.diag([1.0, -1.0, -1.0, -1.0])

_I2 = np.eye(2, dtype=complex)
_Z2 = np.zeros((2, 2), dtype=complex)
SIGMA = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

IDENTITY = np.eye(4, dtype=complex)
_GAMMA = (
    np.block([[_I2, _Z2], [_Z2, -_I2]]),
    *(np.block([[_Z2, s], [-s, _Z2]]) for s in SIGMA),
)
GAMMA5 = 1j * _GAMMA[0] @ _GAMMA[1] @ _GAMMA[2] @ _GAMMA[3]
# Gamma^i = Sigma^{0i} = i gamma^0 gamma^i
_BIG_GAMMA = tuple(1j * _GAMMA[0] @ _GAMMA[i] for i in (1, 2, 3))

CHI_L = 0.5 * (IDENTITY - GAMMA5)
CHI_R = 0.5 * (IDENTITY + GAMMA5)

for _m in (*_GAMMA, GAMMA5, *_BIG_GAMMA, CHI_L, CHI_R):
    _m.setflags(write=False)


def gamma(mu):
    """Return the generator gamma^mu (upper index).

    Parameters
    ----------
    mu : int
        Spacetime index in ``0..3``.

    Returns
    -------
    ndarray
        Read-only ``(4, 4)`` complex matrix with entries in {0, +-1, +-i}.
    """
    if not isinstance(mu, (int, np.integer)) or not 0 <= mu <= 3:
        raise IndexError(f"gamma index must be 0..3, got {mu!r}")
    return _GAMMA[mu]


def gamma_lower(mu):
    """Return gamma_mu = eta_{mu mu} gamma^mu."""
    return ETA[mu, mu] * gamma(mu)


def big_gamma(i):
    """Return Gamma^i = Sigma^{0i} = i gamma^0 gamma^i for ``i`` in 1..3."""
    if not isinstance(i, (int, np.integer)) or not 1 <= i <= 3:
        raise IndexError(f"bilinear index must be 1..3, got {i!r}")
    return _BIG_GAMMA[i - 1]


def sigma_munu(mu, nu):
    """Return Sigma^{mu nu} = (i/2)[gamma^mu, gamma^nu]."""
    g1, g2 = gamma(mu), gamma(nu)
    return 0.5j * (g1 @ g2 - g2 @ g1)


def slash(v_upper):
    """Contract an upper-index 4-vector with gamma_mu, i.e. v^mu gamma_mu."""
    v = np.asarray(v_upper)
    return sum(v[mu] * ETA[mu, mu] * _GAMMA[mu] for mu in range(4))


def spin_adjoint(m):
    """Dirac adjoint gamma^0 M^dagger gamma^0 (antilinear, involutive)."""
    m = np.asarray(m)
    return _GAMMA[0] @ m.conj().swapaxes(-1, -2) @ _GAMMA[0]


BASIS_LABELS = (
    "1", "i g5",
    "g^0", "g^1", "g^2", "g^3",
    "g5 g^0", "g5 g^1", "g5 g^2", "g5 g^3",
    "G^1", "G^2", "G^3",
    "i g5 G^1", "i g5 G^2", "i g5 G^3",
)


def basis16():
    """Return the 16 spin-symmetric basis elements.

    The order is (1, i g5, gamma^mu, g5 gamma^mu, Gamma^i, i g5 Gamma^i).
    """
    return _BASIS


_BASIS = (
    IDENTITY,
    1j * GAMMA5,
    *_GAMMA,
    *(GAMMA5 @ g for g in _GAMMA),
    *_BIG_GAMMA,
    *(1j * GAMMA5 @ g for g in _BIG_GAMMA),
)
for _m in _BASIS:
    _m.setflags(write=False)

# tr(B_a B_a), computed once so that a change of representation cannot
# silently break decompose
BASIS_NORMS = np.array([np.trace(b @ b).real for b in _BASIS])


@dataclass(frozen=True)
class BasisComponents:
    """Coefficients of a spin matrix in the 16-element basis.

    ``vector`` and ``pseudovector`` multiply gamma^mu and g5 gamma^mu (upper
    index); ``bilinear`` and ``pseudobilinear`` multiply Gamma^i and
    i g5 Gamma^i for i = 1, 2, 3.
    """

    scalar: complex = 0.0
    pseudoscalar: complex = 0.0
    vector: np.ndarray = field(default_factory=lambda: np.zeros(4, complex))
    pseudovector: np.ndarray = field(default_factory=lambda: np.zeros(4, complex))
    bilinear: np.ndarray = field(default_factory=lambda: np.zeros(3, complex))
    pseudobilinear: np.ndarray = field(default_factory=lambda: np.zeros(3, complex))

    def as_array(self):
        """Return the 16 coefficients in basis16 order."""
        return np.concatenate([
            [self.scalar, self.pseudoscalar],
            self.vector, self.pseudovector, self.bilinear, self.pseudobilinear,
        ]).astype(complex)

    @classmethod
    def from_array(cls, coeffs):
        c = np.asarray(coeffs, dtype=complex)
        if c.shape != (16,):
            raise ValueError("expected 16 coefficients")
        return cls(c[0], c[1], c[2:6].copy(), c[6:10].copy(),
                   c[10:13].copy(), c[13:16].copy())

    def reconstruct(self):
        """Sum of coefficients times basis elements."""
        return np.tensordot(self.as_array(), np.array(_BASIS), axes=1)


def decompose(m):
    """Decompose a spin matrix into basis16 coefficients by trace projection.

    Parameters
    ----------
    m : array_like, shape (4, 4)

    Returns
    -------
    BasisComponents
    """
    m = np.asarray(m, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
    coeffs = np.array([np.trace(b @ m) for b in _BASIS]) / BASIS_NORMS
    return BasisComponents.from_array(coeffs)
