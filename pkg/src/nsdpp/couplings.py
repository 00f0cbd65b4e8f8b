"""Coupling kernels: a pair ``(X1, X2)`` on ``range(n)`` as one DPP on ``range(2n)``.

Index ``i`` of the second process is stored at position ``n + i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundViolated, DimMismatch, DomainError, IndexOutOfRange, InvalidDouble, NotSymmetric
from .kernel import Kernel, Role, as_kernel, as_matrix
from .validation import ValidationReport, certify, sufficient_conditions

SYMMETRY_TOL = 1e-12
BOUND_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CouplingKernel:
    """A ``2n x 2n`` kernel ``[[K1, M], [N, K2]]``."""

    full: np.ndarray

    def __post_init__(self):
        a = np.array(self.full, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] % 2:
            raise DimMismatch(f"coupling kernel must be square of even size, got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "full", a)

    @classmethod
    def from_blocks(cls, k1, m, nmat, k2):
        return cls(np.block([[as_matrix(k1), np.asarray(m)], [np.asarray(nmat), as_matrix(k2)]]))

    @property
    def n(self) -> int:
        return self.full.shape[0] // 2

    @property
    def K1(self):
        return self.full[: self.n, : self.n]

    @property
    def K2(self):
        return self.full[self.n :, self.n :]

    @property
    def M(self):
        return self.full[: self.n, self.n :]

    @property
    def N(self):
        return self.full[self.n :, : self.n]

    def kernel(self) -> Kernel:
        return Kernel(self.full, Role.CORRELATION)

    def __array__(self, dtype=None, copy=None):
        return self.full if dtype is None else self.full.astype(dtype)


def _pair(k1, k2):
    a, b = as_matrix(k1), as_matrix(k2)
    if a.shape != b.shape:
        raise DimMismatch(f"kernels have different shapes {a.shape} and {b.shape}")
    return a, b


def independent_coupling(k1, k2) -> CouplingKernel:
    """Block-diagonal kernel: ``X1`` and ``X2`` independent."""
    a, b = _pair(k1, k2)
    z = np.zeros_like(a)
    return CouplingKernel.from_blocks(a, z, z, b)


def complement_coupling(k) -> CouplingKernel:
    """``[[K, I - K], [K, I - K]]``: ``X2`` is the complement of ``X1`` almost surely."""
    a = as_kernel(k, Role.CORRELATION).entries
    ik = np.eye(a.shape[0]) - a
    return CouplingKernel.from_blocks(a, ik, a, ik)


def identical_coupling(k) -> CouplingKernel:
    """``[[K, I - K], [-K, K]]``: ``X1 = X2`` almost surely."""
    a = as_kernel(k, Role.CORRELATION).entries
    return CouplingKernel.from_blocks(a, np.eye(a.shape[0]) - a, -a, a)


def split_coupling(k, cap: int | None = None) -> CouplingKernel:
    """``[[K, K], [K, K]]``: a ``DPP(2K)`` split by fair independent coins.

    Raises
    ------
    InvalidDouble
        If ``2K`` is not certified as a DPP kernel.
    """
    a = as_kernel(k, Role.CORRELATION).entries
    rep = certify(2.0 * a, cap=cap)
    if not rep.valid:
        raise InvalidDouble(f"2K is not a DPP kernel ({rep.verdict.value} by {rep.method.value})")
    return CouplingKernel.from_blocks(a, a, a, a)


def sign_alternate_coupling(k1, k2, nmat) -> CouplingKernel:
    """``[[K1, -N], [N^T, K2]]`` for symmetric ``K1``, ``K2``."""
    a, b = _pair(k1, k2)
    nm = np.asarray(nmat, dtype=float)
    return CouplingKernel.from_blocks(a, -nm, nm.T, b)


def sign_alternate_is_valid(k1, k2, nmat) -> ValidationReport:
    """Validity of ``[[K1, -N], [N^T, K2]]`` via the symmetric ``[[K1, N], [N^T, I - K2]]``.

    The second matrix is the particle-hole image of the first over the second
    block, so the spectral test on it decides both ways.
    """
    a, b = _pair(k1, k2)
    for m in (a, b):
        if np.max(np.abs(m - m.T)) > SYMMETRY_TOL:
            raise NotSymmetric("both marginal kernels must be symmetric")
    nm = np.asarray(nmat, dtype=float)
    flipped = np.block([[a, nm], [nm.T, np.eye(a.shape[0]) - b]])
    rep = sufficient_conditions(flipped)
    rep.details["coupling"] = "sign_alternate"
    return rep


def bound_ev(lam, mu, nu) -> tuple[np.ndarray, np.ndarray]:
    """Both squared singular values per index of the shifted coupling matrix.

    Returns ``(lam - 1/2)^2 + (mu^2 + nu^2 +- |mu - nu| sqrt(4 (lam - 1/2)^2 + (mu + nu)^2)) / 2``
    for the ``+`` and ``-`` signs.  The construction is valid iff both are at most ``1/4``.
    """
    lam, mu, nu = (np.asarray(x, dtype=float) for x in (lam, mu, nu))
    c = lam - 0.5
    root = np.abs(mu - nu) * np.sqrt(4.0 * c * c + (mu + nu) ** 2)
    base = c * c + 0.5 * (mu * mu + nu * nu)
    return base + 0.5 * root, base - 0.5 * root


@dataclass(frozen=True, eq=False)
class CouplingSpec:
    """Spectral parameters of an attractive coupling.

    ``K = P D(lam) P^T``, ``M = P D(mu) P^T`` and ``N = -P D(nu) P^T``.
    """

    lam: np.ndarray
    mu: np.ndarray
    nu: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        lam, mu, nu = (np.asarray(x, dtype=float) for x in (self.lam, self.mu, self.nu))
        p = np.asarray(self.basis, dtype=float)
        n = lam.size
        if mu.shape != (n,) or nu.shape != (n,) or p.shape != (n, n):
            raise DimMismatch("lam, mu, nu and basis have inconsistent sizes")
        if np.any(lam < 0) or np.any(lam > 1):
            raise DomainError("eigenvalues lam must lie in [0, 1]")
        if np.any(mu < 0) or np.any(nu < 0):
            raise DomainError("mu and nu must be nonnegative")
        if np.max(np.abs(p.T @ p - np.eye(n))) > 1e-10:
            raise DomainError("basis is not orthogonal")
        for name, val in (("lam", lam), ("mu", mu), ("nu", nu), ("basis", p)):
            object.__setattr__(self, name, val)

    @property
    def n(self) -> int:
        return self.lam.size

    @classmethod
    def from_kernel(cls, k, mu, nu):
        """Spec from a symmetric kernel; its eigenbasis becomes the basis."""
        lam, p = symmetric_eigh(k)
        return cls(lam, mu, nu, p)


def symmetric_eigh(k) -> tuple[np.ndarray, np.ndarray]:
    a = as_matrix(k)
    if np.max(np.abs(a - a.T)) > SYMMETRY_TOL * max(1.0, np.max(np.abs(a))):
        raise NotSymmetric("attractive couplings need a symmetric kernel")
    lam, p = np.linalg.eigh(0.5 * (a + a.T))
    if lam[0] < -1e-9 or lam[-1] > 1 + 1e-9:
        raise DomainError(f"kernel spectrum [{lam[0]:.3e}, {lam[-1]:.3e}] not inside [0, 1]")
    return np.clip(lam, 0.0, 1.0), p


def random_attractive_spec(k, rng, scale: float = 1.0) -> CouplingSpec:
    """Default attractive parameters for a symmetric kernel.

    ``mu_i = nu_i`` drawn uniformly on ``[0, scale * r_i]`` with
    ``r_i = sqrt(1/4 - (lam_i - 1/2)^2)``; for equal ``mu`` and ``nu`` the
    eigenvalue bound reduces to ``(lam_i - 1/2)^2 + mu_i^2 <= 1/4``.
    """
    if not 0.0 <= scale <= 1.0:
        raise DomainError("scale must lie in [0, 1]")
    lam, p = symmetric_eigh(k)
    r = np.sqrt(np.clip(0.25 - (lam - 0.5) ** 2, 0.0, None))
    mu = rng.uniform(0.0, 1.0, lam.size) * r * scale
    return CouplingSpec(lam, mu, mu.copy(), p)


def attractive_coupling(spec: CouplingSpec) -> CouplingKernel:
    """Build ``[[K, M], [N, K]]`` from a :class:`CouplingSpec`.

    Raises
    ------
    BoundViolated
        With the worst index when an eigenvalue bound exceeds ``1/4``.
    """
    plus, minus = bound_ev(spec.lam, spec.mu, spec.nu)
    worst = np.maximum(plus, minus)
    i = int(np.argmax(worst))
    if worst[i] > 0.25 + BOUND_TOL:
        raise BoundViolated(i, float(worst[i]))
    p = spec.basis
    k = (p * spec.lam) @ p.T
    m = (p * spec.mu) @ p.T
    nmat = -(p * spec.nu) @ p.T
    return CouplingKernel.from_blocks(k, m, nmat, k)


def cross_covariance(ck: CouplingKernel, i: int, j: int) -> float:
    """``P(i in X1, j in X2) - P(i in X1) P(j in X2) = -M[i, j] N[j, i]``."""
    n = ck.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexOutOfRange(f"indices ({i}, {j}) outside range({n})")
    return float(-ck.M[i, j] * ck.N[j, i])


def diagonal_cross_covariance(ck: CouplingKernel) -> np.ndarray:
    return -np.diag(ck.M) * np.diag(ck.N)

