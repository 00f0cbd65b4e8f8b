"""Exact samplers.

Randomness is drawn from a stateless counter-based stream: draw ``d`` of
sample ``s`` under seed ``seed`` is a fixed hash of ``(seed, s, d)``.  A batch
therefore produces the same samples however it is chunked or spread across
threads.  ``NSDPP_THREADS`` caps the worker count.
"""

from __future__ import annotations

import enum
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NegativeMass, PivotBreakdown, ProbabilityRange
from .kernel import Role, as_kernel, as_matrix, check_cap, tau_det
from .oracle import enumerate_distribution

PROB_EPS = 1e-8
PIVOT_EPS = 1e-12
_MASK64 = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_BATCH_ENTRIES = 1 << 22


class SamplerMethod(enum.Enum):
    SEQUENTIAL = "seq"
    ENUMERATION = "enum"
    MIXING = "mix"
    RANK_ONE = "rank1"


def _mix64(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def stream_uniforms(seed: int, sample_ids, num_draws: int, first_draw: int = 0) -> np.ndarray:
    """Uniforms in ``[0, 1)`` of shape ``(len(sample_ids), num_draws)``.

    Entry ``[a, d]`` depends only on ``(seed, sample_ids[a], first_draw + d)``.
    """
    with np.errstate(over="ignore"):
        key = _mix64(np.array([seed & _MASK64], dtype=np.uint64) + _GAMMA)
        sid = np.asarray(sample_ids, dtype=np.uint64)
        base = _mix64(key + (sid + np.uint64(1)) * _GAMMA)
        draws = np.arange(first_draw, first_draw + num_draws, dtype=np.uint64) + np.uint64(1)
        z = _mix64(base[:, None] ^ (draws[None, :] * _GAMMA))
    return (z >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


def thread_count(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get("NSDPP_THREADS", "1") or 1)
    return max(1, int(threads))


@dataclass(frozen=True)
class SubsetSample:
    n: int
    members: tuple[int, ...]
    seed: int
    method: SamplerMethod
    index: int = 0


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """``indicators[s, i]`` is True iff index ``i`` belongs to sample ``s``."""

    indicators: np.ndarray
    seed: int
    method: SamplerMethod

    def __len__(self):
        return self.indicators.shape[0]

    def __getitem__(self, s) -> SubsetSample:
        members = tuple(int(i) for i in np.flatnonzero(self.indicators[s]))
        return SubsetSample(self.indicators.shape[1], members, self.seed, self.method, int(s))

    def __iter__(self):
        return (self[s] for s in range(len(self)))


def pivot_update(a: np.ndarray, i: int, include: np.ndarray) -> None:
    """Condition a batch of kernels on the outcome at index ``i``, in place.

    ``a`` has shape ``(N, m, m)``.  Inclusion takes the Schur complement with
    pivot ``a_ii``; exclusion uses pivot ``a_ii - 1`` (the Schur complement of
    the particle-hole image).  Only the trailing block ``i+1:`` is updated.
    """
    m = a.shape[1]
    if i + 1 >= m:
        return
    d = a[:, i, i] - np.where(include, 0.0, 1.0)
    col = a[:, i + 1 :, i]
    row = a[:, i, i + 1 :]
    small = np.abs(d) < PIVOT_EPS
    if np.any(small):
        num = np.max(np.abs(col), axis=1) * np.max(np.abs(row), axis=1)
        if np.any(small & (num >= PIVOT_EPS)):
            raise PivotBreakdown(f"pivot at index {i} vanishes with a nonzero numerator")
        # 0/0: the outcome was deterministic and the trailing block is unaffected
        factor = np.where(small, 0.0, 1.0 / np.where(small, 1.0, d))
    else:
        factor = 1.0 / d
    a[:, i + 1 :, i + 1 :] -= (col * factor[:, None])[:, :, None] * row[:, None, :]


def _checked_probability(p: np.ndarray, i: int) -> np.ndarray:
    if np.any((p < -PROB_EPS) | (p > 1 + PROB_EPS)):
        bad = p[(p < -PROB_EPS) | (p > 1 + PROB_EPS)][0]
        raise ProbabilityRange(f"conditional probability {bad!r} at index {i} is not in [0, 1]")
    return np.clip(p, 0.0, 1.0)


def sequential_core(kernels: np.ndarray, uniforms: np.ndarray) -> np.ndarray:
    """Run the sequential sampler on a batch of kernels ``(N, m, m)``.

    ``kernels`` is overwritten.  Index ``i`` is included iff
    ``uniforms[:, i]`` is below its conditional inclusion probability.
    """
    n_samples, m, _ = kernels.shape
    out = np.zeros((n_samples, m), dtype=bool)
    for i in range(m):
        p = _checked_probability(kernels[:, i, i], i)
        inc = uniforms[:, i] < p
        out[:, i] = inc
        pivot_update(kernels, i, inc)
    return out


def _chunks(num: int, per_sample_entries: int):
    size = max(1, min(num, _BATCH_ENTRIES // max(1, per_sample_entries)))
    return [np.arange(start, min(num, start + size)) for start in range(0, num, size)]


def _run_chunks(fn, num: int, per_sample_entries: int, threads: int | None) -> np.ndarray:
    chunks = _chunks(num, per_sample_entries)
    workers = min(thread_count(threads), len(chunks)) if chunks else 1
    if workers <= 1:
        parts = [fn(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(fn, chunks))
    return np.concatenate(parts, axis=0) if parts else np.zeros((0, 0), dtype=bool)


def sample_sequential_batch(kernel, num: int, seed: int, threads: int | None = None) -> SampleBatch:
    """``num`` independent draws from ``DPP(K)`` by sequential conditioning."""
    k = as_kernel(kernel, Role.CORRELATION).entries
    m = k.shape[0]

    def run(ids):
        u = stream_uniforms(seed, ids, m)
        a = np.broadcast_to(k, (len(ids), m, m)).copy()
        return sequential_core(a, u)

    return SampleBatch(_run_chunks(run, num, m * m, threads), seed, SamplerMethod.SEQUENTIAL)


def sample_sequential(kernel, seed: int, index: int = 0) -> SubsetSample:
    """One draw from ``DPP(K)``; equals sample ``index`` of a batch with the same seed.

    Walks the indices in order, including ``i`` with its current conditional
    probability and then conditioning the remaining kernel on the outcome.
    """
    k = as_kernel(kernel, Role.CORRELATION).entries
    m = k.shape[0]
    u = stream_uniforms(seed, [index], m)
    inc = sequential_core(k[None].copy(), u)[0]
    return SubsetSample(m, tuple(int(i) for i in np.flatnonzero(inc)), seed, SamplerMethod.SEQUENTIAL, index)


def _table_sampler(probs: np.ndarray, n: int, seed: int, ids) -> np.ndarray:
    cdf = np.cumsum(np.clip(probs, 0.0, None))
    u = stream_uniforms(seed, ids, 1)[:, 0] * cdf[-1]
    masks = np.minimum(np.searchsorted(cdf, u, side="right"), probs.size - 1)
    return (masks[:, None] >> np.arange(n)) & 1 == 1


def sample_enumeration_batch(kernel, num: int, seed: int, cap: int | None = None,
                             threads: int | None = None) -> SampleBatch:
    """Inverse-CDF draws from the full subset table (reference sampler)."""
    k = as_kernel(kernel, Role.CORRELATION).entries
    n = k.shape[0]
    check_cap(n, cap)
    table = enumerate_distribution(k, cap, check=False)
    tol = tau_det(k)
    if np.min(table.probs) < -tol:
        raise NegativeMass(f"subset probability {np.min(table.probs):.3e} is negative")
    ind = _run_chunks(lambda ids: _table_sampler(table.probs, n, seed, ids), num, n, threads)
    return SampleBatch(ind, seed, SamplerMethod.ENUMERATION)


def sample_enumeration(kernel, seed: int, index: int = 0, cap: int | None = None) -> SubsetSample:
    k = as_kernel(kernel, Role.CORRELATION).entries
    n = k.shape[0]
    check_cap(n, cap)
    table = enumerate_distribution(k, cap, check=False)
    if np.min(table.probs) < -tau_det(k):
        raise NegativeMass(f"subset probability {np.min(table.probs):.3e} is negative")
    ind = _table_sampler(table.probs, n, seed, [index])[0]
    return SubsetSample(n, tuple(int(i) for i in np.flatnonzero(ind)), seed, SamplerMethod.ENUMERATION, index)


def _check_half_identity(u, v):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != v.shape or u.ndim != 1:
        raise DomainError("u and v must be vectors of equal length")
    w = u * v
    if np.abs(w).sum() > 1.0 + 1e-12:
        raise DomainError("sum |u_i v_i| must not exceed 1")
    return w


def _half_identity_draw(w: np.ndarray, seed: int, ids) -> np.ndarray:
    n = w.size
    u = stream_uniforms(seed, ids, n + 1)
    s = u[:, :n] < 0.5
    signed = np.where(s, w, -w).sum(axis=1)
    keep = u[:, n] < 0.5 * (1.0 + signed)
    return np.where(keep[:, None], s, ~s)


def sample_half_identity_rank_one_batch(u, v, num: int, seed: int,
                                        threads: int | None = None) -> SampleBatch:
    """Draws from ``DPP((I + u v^T) / 2)``.

    A uniform subset ``S`` is kept with probability
    ``(1 + sum_{S} u_i v_i - sum_{not S} u_i v_i) / 2``, otherwise its
    complement is returned.
    """
    w = _check_half_identity(u, v)
    ind = _run_chunks(lambda ids: _half_identity_draw(w, seed, ids), num, w.size, threads)
    return SampleBatch(ind, seed, SamplerMethod.RANK_ONE)


def sample_half_identity_rank_one(u, v, seed: int, index: int = 0) -> SubsetSample:
    w = _check_half_identity(u, v)
    ind = _half_identity_draw(w, seed, [index])[0]
    return SubsetSample(w.size, tuple(int(i) for i in np.flatnonzero(ind)), seed, SamplerMethod.RANK_ONE, index)


@dataclass(frozen=True, eq=False)
class MixingDecomposition:
    """``M = P D(sigma) Q^T`` with ``sigma`` in ``[0, 1]``, sorted descending."""

    p_left: np.ndarray
    q_right: np.ndarray
    sigma: np.ndarray

    @classmethod
    def from_matrix(cls, m) -> "MixingDecomposition":
        a = as_matrix(m)
        p, s, qt = np.linalg.svd(a)
        if s.size and s[0] > 1.0 + 1e-12:
            raise DomainError(f"spectral norm {s[0]!r} exceeds 1")
        return cls(p, qt.T, np.clip(s, 0.0, 1.0))

    @classmethod
    def from_kernel(cls, kernel) -> "MixingDecomposition":
        """Decomposition of ``M = 2K - I`` for a kernel ``K = (I + M) / 2``."""
        k = as_kernel(kernel, Role.CORRELATION).entries
        return cls.from_matrix(2.0 * k - np.eye(k.shape[0]))

    @property
    def n(self) -> int:
        return self.sigma.size

    def matrix(self) -> np.ndarray:
        return (self.p_left * self.sigma) @ self.q_right.T


def _mixing_draw(dec: MixingDecomposition, seed: int, ids) -> np.ndarray:
    n = dec.n
    u = stream_uniforms(seed, ids, 2 * n)
    b = (u[:, :n] < dec.sigma).astype(float)
    kern = 0.5 * np.einsum("ik,sk,jk->sij", dec.p_left, b, dec.q_right)
    kern[:, np.arange(n), np.arange(n)] += 0.5
    return sequential_core(kern, u[:, n:])


def sample_mixing_batch(dec: MixingDecomposition, num: int, seed: int,
                        threads: int | None = None) -> SampleBatch:
    """Draws from ``DPP((I + M) / 2)`` through random projection-free kernels.

    Each singular value of ``M`` is replaced by an independent Bernoulli of
    that parameter and the resulting kernel is sampled sequentially.
    """
    ind = _run_chunks(lambda ids: _mixing_draw(dec, seed, ids), num, 2 * dec.n * dec.n, threads)
    return SampleBatch(ind, seed, SamplerMethod.MIXING)


def sample_mixing(dec: MixingDecomposition, seed: int, index: int = 0) -> SubsetSample:
    ind = _mixing_draw(dec, seed, [index])[0]
    return SubsetSample(dec.n, tuple(int(i) for i in np.flatnonzero(ind)), seed, SamplerMethod.MIXING, index)


def half_identity_factors(kernel, tol: float = 1e-10) -> tuple[np.ndarray, np.ndarray]:
    """Recover ``u, v`` with ``K = (I + u v^T) / 2``; raises if ``2K - I`` is not rank one."""
    k = as_kernel(kernel, Role.CORRELATION).entries
    p, s, qt = np.linalg.svd(2.0 * k - np.eye(k.shape[0]))
    if s.size > 1 and s[1] > tol:
        raise DomainError("2K - I is not of rank one")
    return p[:, 0] * s[0], qt[0]


def sample_batch(kernel, num: int, seed: int, method: str | SamplerMethod = "seq",
                 cap: int | None = None, threads: int | None = None) -> SampleBatch:
    """Dispatch to one of the samplers given a correlation kernel."""
    method = SamplerMethod(method)
    if method is SamplerMethod.SEQUENTIAL:
        return sample_sequential_batch(kernel, num, seed, threads)
    if method is SamplerMethod.ENUMERATION:
        return sample_enumeration_batch(kernel, num, seed, cap, threads)
    if method is SamplerMethod.MIXING:
        return sample_mixing_batch(MixingDecomposition.from_kernel(kernel), num, seed, threads)
    u, v = half_identity_factors(kernel)
    return sample_half_identity_rank_one_batch(u, v, num, seed, threads)
