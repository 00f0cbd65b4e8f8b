"""Brute-force ground truth over all ``2**n`` subsets.

Tables are always indexed by bitmask (bit ``i`` set iff index ``i`` is in the
subset).  Everything here is exponential in ``n`` and guarded by an
enumeration cap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, NonProbabilityOutput
from .kernel import (
    Role,
    all_principal_minors,
    as_kernel,
    check_cap,
    row_mixture_dets,
    tau_det,
)


@dataclass(frozen=True, eq=False)
class ProbabilityTable:
    """Probabilities of every subset of ``range(n)`` in bitmask order."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (1 << self.n,):
            raise DimMismatch(f"table for n={self.n} needs {1 << self.n} entries, got {p.shape}")
        object.__setattr__(self, "probs", p)

    def __getitem__(self, mask):
        return self.probs[mask]

    def __len__(self):
        return len(self.probs)

    def cardinality_pmf(self) -> np.ndarray:
        return cardinality_from_table(self.probs)


def enumerate_distribution(kernel, cap: int | None = None, check: bool = True) -> ProbabilityTable:
    """Table of ``P(X = S)`` for ``X ~ DPP(K)``.

    Entry ``S`` is the determinant of the matrix with rows of ``K`` on ``S``
    and rows of ``I - K`` off ``S``.  With ``check`` the total mass is
    verified to be 1 within ``2**n * tau_det``.
    """
    k = as_kernel(kernel, Role.CORRELATION).entries
    n = k.shape[0]
    check_cap(n, cap)
    probs = row_mixture_dets(k, np.eye(n) - k)
    if check:
        err = abs(probs.sum() - 1.0)
        if err > (1 << n) * tau_det(k):
            raise NonProbabilityOutput(f"subset probabilities sum to {probs.sum()!r}")
    return ProbabilityTable(n, probs)


def lensemble_distribution(kernel, cap: int | None = None) -> ProbabilityTable:
    """Table of ``det(L_S) / det(I + L)``."""
    ell = as_kernel(kernel, Role.LENSEMBLE).entries
    minors = all_principal_minors(ell, cap)
    return ProbabilityTable(ell.shape[0], minors / minors.sum())


def superset_sums(values: np.ndarray) -> np.ndarray:
    """``out[S] = sum_{T >= S} values[T]`` by the subset-sum (zeta) transform."""
    out = np.array(values, dtype=float, copy=True)
    n = out.size.bit_length() - 1
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 0, :] += view[:, 1, :]
    return out


def inclusion_consistency(kernel, cap: int | None = None) -> float:
    """``max_S |sum_{T >= S} P(X = T) - det(K_S)|``."""
    k = as_kernel(kernel, Role.CORRELATION).entries
    table = enumerate_distribution(k, cap, check=False)
    minors = all_principal_minors(k, cap)
    return float(np.max(np.abs(superset_sums(table.probs) - minors)))


def _as_probs(obj) -> np.ndarray:
    if isinstance(obj, ProbabilityTable):
        return obj.probs
    p = np.asarray(obj, dtype=float)
    total = p.sum()
    if total <= 0:
        raise DimMismatch("empirical counts must have positive total")
    # counts are normalized; already normalized tables are left unchanged
    return p / total


def tv_distance(a, b) -> float:
    """Total-variation distance ``1/2 sum_S |a_S - b_S|``.

    Either argument may be a :class:`ProbabilityTable`, a probability vector
    or a vector of empirical counts (normalized first).
    """
    pa, pb = _as_probs(a), _as_probs(b)
    if pa.shape != pb.shape:
        raise DimMismatch(f"tables have different sizes: {pa.shape} vs {pb.shape}")
    return 0.5 * float(np.abs(pa - pb).sum())


def pushforward_xor(table, s_mask: int) -> ProbabilityTable:
    """Law of ``X xor S`` (the particle-hole image of ``X`` over ``S``)."""
    probs = table.probs if isinstance(table, ProbabilityTable) else np.asarray(table)
    n = probs.size.bit_length() - 1
    idx = np.arange(probs.size) ^ s_mask
    out = np.empty_like(probs)
    out[idx] = probs
    return ProbabilityTable(n, out)


def flip_mixture(table, p) -> ProbabilityTable:
    """Law of ``X`` after flipping each index ``i`` independently with probability ``p[i]``."""
    probs = table.probs if isinstance(table, ProbabilityTable) else np.asarray(table)
    n = probs.size.bit_length() - 1
    p = np.asarray(p, dtype=float)
    bits = (np.arange(1 << n)[:, None] >> np.arange(n)) & 1 == 1
    weights = np.prod(np.where(bits, p, 1.0 - p), axis=1)
    out = np.zeros_like(probs)
    idx = np.arange(1 << n)
    for f, w in enumerate(weights):
        if w != 0.0:
            out[idx ^ f] += w * probs
    return ProbabilityTable(n, out)


def marginal(table, members) -> ProbabilityTable:
    """Law of ``X & members`` re-indexed onto ``range(len(members))``."""
    probs = table.probs if isinstance(table, ProbabilityTable) else np.asarray(table)
    members = list(members)
    masks = np.arange(probs.size)
    sub = np.zeros(probs.size, dtype=np.int64)
    for j, i in enumerate(members):
        sub |= ((masks >> i) & 1) << j
    out = np.bincount(sub, weights=probs, minlength=1 << len(members))
    return ProbabilityTable(len(members), out)


def cardinality_from_table(probs) -> np.ndarray:
    probs = np.asarray(probs)
    n = probs.size.bit_length() - 1
    sizes = np.array([bin(m).count("1") for m in range(probs.size)])
    return np.bincount(sizes, weights=probs, minlength=n + 1)


def inclusion_probability(table, members) -> float:
    """``P(members in X)`` read off the table."""
    probs = table.probs if isinstance(table, ProbabilityTable) else np.asarray(table)
    m = 0
    for i in members:
        m |= 1 << int(i)
    masks = np.arange(probs.size)
    return float(probs[(masks & m) == m].sum())


def empirical_table(indicators: np.ndarray) -> np.ndarray:
    """Counts per bitmask from a boolean ``(N, n)`` sample matrix."""
    ind = np.asarray(indicators, dtype=bool)
    n = ind.shape[1]
    masks = ind.astype(np.int64) @ (1 << np.arange(n, dtype=np.int64))
    return np.bincount(masks, minlength=1 << n).astype(float)
