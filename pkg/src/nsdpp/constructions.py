"""Kernel families with closed-form laws, and random valid-kernel generators."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .errors import DomainError, NormalizationError
from .kernel import Kernel, Role
from .spectrum import CardinalityLaw, _expand_linear_factors, pair_conjugates
from .validation import Method, ValidationReport, Verdict

RANK_ONE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class CompanionSpec:
    """Coefficients ``c_0..c_{n-1}`` of the monic ``P(X) = c_0 + ... + c_{n-1} X^{n-1} + X^n``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 1 or c.size < 1:
            raise DomainError("need at least one coefficient")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise DomainError("companion coefficients must be finite and nonnegative")
        object.__setattr__(self, "coeffs", c)

    @property
    def n(self) -> int:
        return self.coeffs.size

    @classmethod
    def from_lensemble_spectrum(cls, eigenvalues):
        """Coefficients of ``prod (X + lambda_i)`` for a P0 spectrum."""
        v = pair_conjugates(eigenvalues)
        c = _expand_linear_factors(v, np.ones(len(v), dtype=complex))
        return cls(np.clip(c[:-1], 0.0, None))

    @classmethod
    def from_kernel_spectrum(cls, eigenvalues):
        """Coefficients of ``prod (X + lambda_i / (1 - lambda_i))`` for a DPP spectrum."""
        v = pair_conjugates(eigenvalues)
        if np.any(np.abs(v - 1.0) < 1e-12):
            raise DomainError("eigenvalue 1 has no L-ensemble counterpart")
        return cls.from_lensemble_spectrum(v / (1.0 - v))

    def masses(self) -> dict[tuple[int, ...], float]:
        """Closed-form law: suffix sets ``{k, ..., n-1}`` and the empty set."""
        total = self.coeffs.sum() + 1.0
        out = {(): 1.0 / total}
        for k, c in enumerate(self.coeffs):
            out[tuple(range(k, self.n))] = c / total
        return out


def companion_l(spec) -> Kernel:
    """L-ensemble kernel with ``-1`` on the superdiagonal and ``c`` on the last row."""
    if not isinstance(spec, CompanionSpec):
        spec = CompanionSpec(spec)
    n = spec.n
    ell = np.zeros((n, n))
    ell[np.arange(n - 1), np.arange(1, n)] = -1.0
    ell[-1, :] = spec.coeffs
    return Kernel(ell, Role.LENSEMBLE)


def companion_k(spec) -> Kernel:
    """Closed-form correlation kernel of the companion L-ensemble.

    Every row equals the normalized partial sums ``(c_0 + ... + c_j) / (sum c + 1)``,
    minus ones on the strict upper triangle.
    """
    if not isinstance(spec, CompanionSpec):
        spec = CompanionSpec(spec)
    c = spec.coeffs
    n = spec.n
    row = np.cumsum(c) / (c.sum() + 1.0)
    k = np.tile(row, (n, 1)) - np.triu(np.ones((n, n)), 1)
    return Kernel(k, Role.CORRELATION)


@dataclass(frozen=True, eq=False)
class RankOneSpec:
    u: np.ndarray
    v: np.ndarray
    lam: float = 1.0

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if u.shape != v.shape or u.ndim != 1:
            raise DomainError("u and v must be vectors of equal length")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)


def rank_one_kernel(spec: RankOneSpec) -> tuple[Kernel, ValidationReport]:
    """``K = lam u v^T`` with ``<u, v> = 1``.

    Valid iff every ``u_i v_i >= 0`` and ``lam`` is in ``[0, 1]``; then
    ``P(X = {i}) = lam u_i v_i``, ``P(X = {}) = 1 - lam`` and larger sets have
    no mass.
    """
    u, v, lam = spec.u, spec.v, float(spec.lam)
    if abs(u @ v - 1.0) > 1e-10:
        raise NormalizationError(f"<u, v> = {u @ v!r}, expected 1")
    k = Kernel(lam * np.outer(u, v), Role.CORRELATION)
    prods = u * v
    if lam < 0 or lam > 1:
        # P(X = {}) = 1 - lam, or some P(X = {i}) < 0 when lam < 0
        p = (1,) * u.size if lam > 1 else tuple(int(j != int(np.argmax(prods))) for j in range(u.size))
        val = 1.0 - lam if lam > 1 else float(lam * prods.max())
        return k, ValidationReport(Verdict.INVALID, Method.CARA1, witness=p, witness_value=val,
                                   details={"reason": "lambda outside [0, 1]"})
    bad = np.flatnonzero(prods < -RANK_ONE_TOL)
    if bad.size:
        i = int(bad[0])
        # P(X = {i}) = lam u_i v_i < 0; as a switching pattern p = 1 off {i}
        p = tuple(int(j != i) for j in range(u.size))
        return k, ValidationReport(
            Verdict.INVALID, Method.CARA1, witness=p,
            witness_value=float(lam * prods[i]), tolerance=RANK_ONE_TOL,
        )
    return k, ValidationReport(Verdict.VALID, Method.CARA1, tolerance=RANK_ONE_TOL)


def half_identity_rank_one(u, v) -> tuple[Kernel, ValidationReport]:
    """``K = (I + u v^T) / 2``, a DPP kernel iff ``sum |u_i v_i| <= 1``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.size
    k = Kernel(0.5 * (np.eye(n) + np.outer(u, v)), Role.CORRELATION)
    w = u * v
    total = float(np.abs(w).sum())
    if total <= 1.0 + RANK_ONE_TOL:
        return k, ValidationReport(Verdict.VALID, Method.HALF_IDENTITY_NORM, tolerance=RANK_ONE_TOL,
                                   details={"sum_abs_uv": total})
    # the least likely subset S collects the negative products; p = 1 off S
    p = tuple(int(x >= 0) for x in w)
    return k, ValidationReport(
        Verdict.INVALID, Method.CARA1, witness=p,
        witness_value=float(2.0 ** -n * (1.0 - total)), tolerance=RANK_ONE_TOL,
        details={"sum_abs_uv": total},
    )


def half_identity_set_probability(u, v, s) -> float:
    """``P(X = S) = 2^-n (1 + sum_{i in S} u_i v_i - sum_{i not in S} u_i v_i)``."""
    w = np.asarray(u, dtype=float) * np.asarray(v, dtype=float)
    n = w.size
    ind = np.zeros(n, dtype=bool)
    ind[list(s)] = True
    return float(2.0 ** -n * (1.0 + w[ind].sum() - w[~ind].sum()))


def half_identity_table(u, v) -> np.ndarray:
    """Closed-form ``P(X = S)`` for every bitmask ``S``."""
    w = np.asarray(u, dtype=float) * np.asarray(v, dtype=float)
    n = w.size
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)) & 1
    signed = (2 * bits - 1) @ w
    return 2.0 ** -n * (1.0 + signed)


def half_identity_rank_one_cardinality(u, v) -> CardinalityLaw:
    """Closed-form law of ``|X|`` for ``K = (I + u v^T) / 2``.

    ``P(|X| = k) = 2^-n (C(n, k) + (C(n-1, k-1) - C(n-1, k)) <u, v>)``
    with ``C(m, j) = 0`` outside ``0 <= j <= m``.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.abs(u * v).sum() > 1.0 + RANK_ONE_TOL:
        raise DomainError("sum |u_i v_i| must not exceed 1")
    n = u.size
    dot = float(u @ v)

    def c(m, j):
        return comb(m, j) if 0 <= j <= m else 0

    pmf = np.array([(c(n, k) + (c(n - 1, k - 1) - c(n - 1, k)) * dot) for k in range(n + 1)])
    return CardinalityLaw(pmf * 2.0 ** -n)


# -- random valid kernels ---------------------------------------------------

FAMILIES = (
    "symmetric",
    "half_identity",
    "particle_hole",
    "companion",
    "block_triangular",
    "rank_one_half",
    "shrunk",
)


def random_orthogonal(n: int, rng) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))


def random_symmetric_kernel(n: int, rng) -> np.ndarray:
    q = random_orthogonal(n, rng)
    lam = rng.uniform(0.0, 1.0, n)
    k = (q * lam) @ q.T
    return 0.5 * (k + k.T)


def random_contraction(n: int, rng, max_norm: float = 1.0) -> np.ndarray:
    """Random real matrix with spectral norm drawn uniformly from ``(0, max_norm]``."""
    m = rng.standard_normal((n, n))
    s = np.linalg.norm(m, 2)
    return m * (max_norm * rng.uniform(0.2, 1.0) / s)


def random_kernel(n: int, rng, family: str = "mixed") -> np.ndarray:
    """A random DPP kernel, valid by construction.

    ``family`` selects one of :data:`FAMILIES` or ``"mixed"`` to pick one at
    random.  Most families are nonsymmetric and many have complex spectra.
    """
    from .transforms import particle_hole

    if family == "mixed":
        family = FAMILIES[rng.integers(len(FAMILIES))]
    if family == "symmetric":
        return random_symmetric_kernel(n, rng)
    if family == "half_identity":
        return 0.5 * (np.eye(n) + random_contraction(n, rng))
    if family == "particle_hole":
        s = np.flatnonzero(rng.random(n) < 0.5)
        return np.array(particle_hole(random_symmetric_kernel(n, rng), s).entries)
    if family == "companion":
        return np.array(companion_k(rng.exponential(1.0, n)).entries)
    if family == "block_triangular":
        if n == 1:
            return random_symmetric_kernel(1, rng)
        b = int(rng.integers(1, n))
        k = np.zeros((n, n))
        k[:b, :b] = random_kernel(b, rng)
        k[b:, b:] = random_kernel(n - b, rng)
        k[:b, b:] = rng.uniform(-1.0, 1.0, (b, n - b))
        perm = rng.permutation(n) if rng.random() < 0.5 else np.arange(n)
        return k[np.ix_(perm, perm)]
    if family == "rank_one_half":
        u = rng.standard_normal(n)
        v = rng.standard_normal(n)
        scale = rng.uniform(0.1, 1.0) / np.abs(u * v).sum()
        return 0.5 * (np.eye(n) + np.outer(u, v) * scale)
    if family == "shrunk":
        t = rng.uniform(0.0, 0.9)
        return (1.0 - t) * random_kernel(n, rng) + 0.5 * t * np.eye(n)
    raise DomainError(f"unknown kernel family {family!r}")


def random_lensemble(n: int, rng) -> np.ndarray:
    """``k_to_l`` of a random valid kernel, retried until ``I - K`` is well conditioned."""
    from .kernel import k_to_l

    while True:
        k = random_kernel(n, rng)
        if np.linalg.cond(np.eye(n) - k) < 1e6:
            return np.array(k_to_l(k).entries)

