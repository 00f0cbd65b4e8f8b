"""Certify whether a matrix is a DPP kernel (or a P0 L-ensemble kernel).

Exact answers come from exhaustive enumeration up to a cap.  Above the cap
the cheap sufficient conditions are tried, and a randomized search may still
produce an ``INVALID`` verdict with a re-checkable witness.  Deciding
validity in general is co-NP-hard, so ``UNKNOWN`` is a legitimate answer.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import DomainError, SingularConversion, ZeroVector
from .kernel import (
    Kernel,
    Role,
    all_principal_minors,
    as_kernel,
    as_matrix,
    check_cap,
    from_mask,
    l_to_k,
    row_mixture_dets,
    tau_det,
)

SYMMETRY_TOL = 1e-12
NORM_TOL = 1e-12
# witnesses whose value is this close to zero are flagged as boundary cases
NEAR_ZERO = 1e-6


class Verdict(enum.Enum):
    VALID = "Valid"
    INVALID = "Invalid"
    UNKNOWN = "Unknown"


class Method(enum.Enum):
    EXHAUSTIVE_MINORS = "ExhaustiveMinors"
    CARA1 = "Cara1"
    CARA2_RANDOMIZED = "Cara2Randomized"
    CARA3_WITNESS = "Cara3Witness"
    SYMMETRIC_SPECTRUM = "SymmetricSpectrum"
    HALF_IDENTITY_NORM = "HalfIdentityNorm"
    DIAGONAL_DOMINANCE = "DiagonalDominance"
    BLOCK_TRIANGULAR = "BlockTriangular"


@dataclass
class ValidationReport:
    """Outcome of a validity check.

    ``witness`` is a subset (tuple of indices) for the exhaustive minor scan,
    a binary tuple ``p`` for the switching-determinant scan, a vector ``p`` in
    ``(0, 1)^n`` for the randomized test, or a vector ``x`` satisfying the
    vector criterion at every coordinate.  ``witness_value`` is the offending
    determinant when there is one, and ``near_zero`` flags witnesses sitting
    within ``1e-6`` of the boundary.
    """

    verdict: Verdict
    method: Method
    witness: Any = None
    tolerance: float = 0.0
    witness_value: float | None = None
    near_zero: bool = False
    details: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        return self.verdict is Verdict.VALID

    @property
    def invalid(self) -> bool:
        return self.verdict is Verdict.INVALID

    def to_dict(self) -> dict:
        w = self.witness
        if isinstance(w, np.ndarray):
            w = w.tolist()
        elif isinstance(w, tuple):
            w = list(w)
        out = {
            "verdict": self.verdict.value,
            "method": self.method.value,
            "witness": w,
            "tolerance": self.tolerance,
        }
        if self.witness_value is not None:
            out["witness_value"] = self.witness_value
            out["near_zero"] = self.near_zero
        if self.details:
            out["details"] = self.details
        return out


def _first_violation(values: np.ndarray, tol: float):
    bad = np.flatnonzero(values < -tol)
    if bad.size == 0:
        return None
    return int(bad[0])


def is_p0_exhaustive(kernel, cap: int | None = None) -> ValidationReport:
    """Check every principal minor of ``L`` for nonnegativity."""
    ell = as_matrix(kernel)
    n = ell.shape[0]
    check_cap(n, cap)
    tol = tau_det(ell)
    minors = all_principal_minors(ell, cap)
    first = _first_violation(minors, tol)
    if first is None:
        return ValidationReport(Verdict.VALID, Method.EXHAUSTIVE_MINORS, tolerance=tol)
    val = float(minors[first])
    return ValidationReport(
        Verdict.INVALID,
        Method.EXHAUSTIVE_MINORS,
        witness=from_mask(first, n),
        tolerance=tol,
        witness_value=val,
        near_zero=abs(val) < NEAR_ZERO,
    )


def switching_determinant(kernel, p) -> float:
    """``det(D(p)(I - K) + D(1 - p) K)``."""
    k = as_matrix(kernel)
    p = np.asarray(p, dtype=float)
    a = (1.0 - 2.0 * p)[:, None] * k
    a[np.diag_indices_from(a)] += p
    return float(np.linalg.det(a))


def is_dpp_cara1(kernel, cap: int | None = None) -> ValidationReport:
    """Scan ``det(D(p)(I - K) + D(1 - p) K) >= 0`` over every binary ``p``.

    Bitmask ``b`` encodes ``p_i = 1`` iff bit ``i`` of ``b`` is set; the
    first violating ``p`` in that order is returned.
    """
    k = as_matrix(kernel)
    n = k.shape[0]
    check_cap(n, cap)
    tol = tau_det(k)
    dets = row_mixture_dets(np.eye(n) - k, k)
    first = _first_violation(dets, tol)
    if first is None:
        return ValidationReport(Verdict.VALID, Method.CARA1, tolerance=tol)
    p = tuple((first >> i) & 1 for i in range(n))
    val = float(dets[first])
    return ValidationReport(
        Verdict.INVALID,
        Method.CARA1,
        witness=p,
        tolerance=tol,
        witness_value=val,
        near_zero=abs(val) < NEAR_ZERO,
    )


def is_dpp_cara2_randomized(kernel, trials: int = 1000, rng_seed: int = 0) -> ValidationReport:
    """Look for ``p`` in ``(0, 1)^n`` with a nonpositive switching determinant.

    Never certifies validity: the verdict is ``INVALID`` with the witness
    ``p``, or ``UNKNOWN``.
    """
    if trials < 1:
        raise DomainError("trials must be at least 1")
    k = as_matrix(kernel)
    n = k.shape[0]
    rng = np.random.default_rng(rng_seed)
    batch = max(1, min(trials, (1 << 22) // max(1, n * n)))
    done = 0
    while done < trials:
        m = min(batch, trials - done)
        p = rng.uniform(0.0, 1.0, size=(m, n))
        # open interval: uniform() may return exactly 0
        p = np.where(p == 0.0, np.nextafter(0.0, 1.0), p)
        mats = (1.0 - 2.0 * p)[:, :, None] * k[None]
        mats[:, np.arange(n), np.arange(n)] += p
        dets = np.linalg.det(mats)
        bad = np.flatnonzero(dets <= 0)
        if bad.size:
            j = int(bad[0])
            return ValidationReport(
                Verdict.INVALID,
                Method.CARA2_RANDOMIZED,
                witness=p[j],
                tolerance=0.0,
                witness_value=float(dets[j]),
                near_zero=abs(dets[j]) < NEAR_ZERO,
            )
        done += m
    return ValidationReport(Verdict.UNKNOWN, Method.CARA2_RANDOMIZED, details={"trials": trials})


def cara3_violation_check(kernel, x) -> bool:
    """True iff ``x`` proves ``K`` is not a DPP kernel.

    That is, every coordinate has ``x_i (Kx)_i < 0``, ``|(Kx)_i| > |x_i|``
    or ``x_i = 0``.
    """
    k = as_matrix(kernel)
    x = np.asarray(x, dtype=float)
    if not np.any(x != 0):
        raise ZeroVector("x must be nonzero")
    kx = k @ x
    ok = (x * kx < 0) | (np.abs(kx) > np.abs(x)) | (x == 0)
    return bool(np.all(ok))


def _switching_matrix(k: np.ndarray, p: np.ndarray) -> np.ndarray:
    a = (1.0 - 2.0 * p)[:, None] * k
    a[np.diag_indices_from(a)] += p
    return a


def cara3_search(kernel, trials: int = 1000, rng_seed: int = 0) -> ValidationReport:
    """Try to build a vector witness ``x``.

    A nonpositive switching determinant at some interior ``p`` is found by the
    randomized test; bisection on the segment from ``1/2`` (where the
    determinant is ``2^-n > 0``) locates a singular switching matrix and its
    null vector is checked as a witness.  Random ``x`` are tried as well.
    """
    k = as_matrix(kernel)
    n = k.shape[0]
    rep = is_dpp_cara2_randomized(k, trials, rng_seed)
    if rep.invalid:
        target = np.asarray(rep.witness)
        centre = np.full(n, 0.5)
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if np.linalg.det(_switching_matrix(k, centre + mid * (target - centre))) > 0:
                lo = mid
            else:
                hi = mid
        for t in (hi, lo):
            a = _switching_matrix(k, centre + t * (target - centre))
            x = np.linalg.svd(a)[2][-1]
            x = np.where(np.abs(x) < 1e-14 * np.max(np.abs(x)), 0.0, x)
            if np.any(x != 0) and cara3_violation_check(k, x):
                return ValidationReport(Verdict.INVALID, Method.CARA3_WITNESS, witness=x)
    rng = np.random.default_rng(rng_seed + 1)
    for _ in range(trials):
        x = rng.standard_normal(n)
        if cara3_violation_check(k, x):
            return ValidationReport(Verdict.INVALID, Method.CARA3_WITNESS, witness=x)
    return ValidationReport(Verdict.UNKNOWN, Method.CARA3_WITNESS)


def spectral_norm(m: np.ndarray, rtol: float = 1e-12) -> float:
    """Largest singular value by power iteration on ``M^T M``.

    Falls back to a full SVD when the iteration has not converged after
    ``10 n`` steps.
    """
    a = np.asarray(m, dtype=float)
    n = a.shape[0]
    if not np.any(a):
        return 0.0
    g = a.T @ a
    x = np.ones(n) / np.sqrt(n) + np.linspace(0.0, 1e-3, n)
    x /= np.linalg.norm(x)
    prev = 0.0
    for _ in range(10 * n):
        y = g @ x
        val = float(np.linalg.norm(y))
        if val == 0.0:
            break
        x = y / val
        if abs(val - prev) <= rtol * val:
            return float(np.sqrt(x @ g @ x))
        prev = val
    return float(np.linalg.norm(a, 2))


def _block_split(k: np.ndarray):
    """Smallest ``b`` such that ``k`` is block upper or lower triangular at ``b``."""
    n = k.shape[0]
    for b in range(1, n):
        if not np.any(k[b:, :b]) or not np.any(k[:b, b:]):
            return b
    return None


def _embed(witness, offset: int, n: int, method: Method):
    if witness is None:
        return None
    if method is Method.SYMMETRIC_SPECTRUM or method is Method.BLOCK_TRIANGULAR:
        x = np.zeros(n)
        w = np.asarray(witness, dtype=float)
        x[offset : offset + len(w)] = w
        return x
    return witness


def is_diagonally_dominant(kernel) -> bool:
    """``min(K_ii, 1 - K_ii) > sum_{j != i} |K_ij|`` for every row."""
    k = as_matrix(kernel)
    diag = np.diag(k)
    off = np.sum(np.abs(k), axis=1) - np.abs(diag)
    return bool(np.all(np.minimum(diag, 1.0 - diag) > off))


def sufficient_conditions(kernel) -> ValidationReport:
    """Fast checks, tried in order.

    1. symmetric: spectrum in ``[0, 1]`` decides both ways;
    2. ``||I - 2K||_2 <= 1``;
    3. ``min(K_ii, 1 - K_ii) > sum_{j != i} |K_ij|`` for every row;
    4. block-triangular: valid iff every diagonal block is, checked recursively.

    Otherwise ``UNKNOWN``.
    """
    k = as_matrix(kernel)
    n = k.shape[0]
    tol = tau_det(k)
    if np.max(np.abs(k - k.T)) <= SYMMETRY_TOL:
        sym = 0.5 * (k + k.T)
        vals, vecs = np.linalg.eigh(sym)
        if vals[0] >= -tol and vals[-1] <= 1 + tol:
            return ValidationReport(Verdict.VALID, Method.SYMMETRIC_SPECTRUM, tolerance=tol)
        j = 0 if vals[0] < -tol else n - 1
        return ValidationReport(
            Verdict.INVALID,
            Method.SYMMETRIC_SPECTRUM,
            witness=vecs[:, j],
            tolerance=tol,
            witness_value=float(vals[j]),
        )
    if spectral_norm(np.eye(n) - 2.0 * k) <= 1.0 + NORM_TOL:
        return ValidationReport(Verdict.VALID, Method.HALF_IDENTITY_NORM, tolerance=NORM_TOL)
    if is_diagonally_dominant(k):
        return ValidationReport(Verdict.VALID, Method.DIAGONAL_DOMINANCE, tolerance=0.0)
    b = _block_split(k)
    if b is not None:
        top = sufficient_conditions(k[:b, :b])
        bottom = sufficient_conditions(k[b:, b:])
        for rep, offset in ((top, 0), (bottom, b)):
            if rep.invalid and rep.witness is not None and rep.method in (
                Method.SYMMETRIC_SPECTRUM,
                Method.BLOCK_TRIANGULAR,
            ):
                return ValidationReport(
                    Verdict.INVALID,
                    Method.BLOCK_TRIANGULAR,
                    witness=_embed(rep.witness, offset, n, rep.method),
                    tolerance=tol,
                    details={"split": b},
                )
        if top.valid and bottom.valid:
            return ValidationReport(
                Verdict.VALID,
                Method.BLOCK_TRIANGULAR,
                tolerance=tol,
                details={"split": b, "blocks": [top.method.value, bottom.method.value]},
            )
    return ValidationReport(Verdict.UNKNOWN, Method.BLOCK_TRIANGULAR if b else Method.DIAGONAL_DOMINANCE)


def shrink_to_center(kernel, t: float) -> Kernel:
    """``(1 - t) K + t/2 I``; stays a DPP kernel whenever ``K`` is one."""
    if not 0.0 <= t <= 1.0:
        raise DomainError(f"t={t} outside [0, 1]")
    k = as_kernel(kernel, Role.CORRELATION).entries
    return Kernel((1.0 - t) * k + 0.5 * t * np.eye(k.shape[0]), Role.CORRELATION)


def certify(kernel, role: Role = Role.CORRELATION, cap: int | None = None, seed: int = 0,
            trials: int = 1000) -> ValidationReport:
    """Best available verdict: exact up to the cap, heuristics above it."""
    a = as_matrix(kernel)
    n = a.shape[0]
    limit = 16 if cap is None else cap
    if role is Role.LENSEMBLE:
        if n <= limit:
            return is_p0_exhaustive(a, limit)
        try:
            k = l_to_k(Kernel(a, Role.LENSEMBLE)).entries
        except SingularConversion:
            return ValidationReport(Verdict.UNKNOWN, Method.EXHAUSTIVE_MINORS)
        rep = sufficient_conditions(k)
        if rep.valid:
            return rep
        return ValidationReport(Verdict.UNKNOWN, rep.method)
    if n <= limit:
        return is_dpp_cara1(a, limit)
    rep = sufficient_conditions(a)
    if rep.verdict is not Verdict.UNKNOWN:
        return rep
    rep = cara3_search(a, trials, seed)
    if rep.invalid:
        return rep
    return is_dpp_cara2_randomized(a, trials, seed)
