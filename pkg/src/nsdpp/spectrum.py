"""Eigenvalue analytics: admissible region, factorial moments and the law of ``|X|``."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConvergenceFailure, DomainError, NonProbabilityOutput, OutOfRegion
from .kernel import Role, as_kernel, as_matrix

PAIR_TOL = 1e-9
REGION_TOL = 1e-9
CLAMP_TOL = 1e-9
REJECT_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Complex eigenvalues with multiplicity, closed under conjugation."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=complex))

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def split(self):
        """Return ``(real_values, upper_half_plane_representatives)``."""
        v = self.values
        real = v[v.imag == 0].real
        upper = v[v.imag > 0]
        return real, upper


@dataclass(frozen=True, eq=False)
class CardinalityLaw:
    pmf: np.ndarray
    source_spectrum: Spectrum | None = None

    def mean(self) -> float:
        return float(np.arange(len(self.pmf)) @ self.pmf)

    def variance(self) -> float:
        k = np.arange(len(self.pmf))
        m = self.mean()
        return float(((k - m) ** 2) @ self.pmf)


def pair_conjugates(values) -> np.ndarray:
    """Snap near-real values onto the real line and make complex pairs exact conjugates."""
    v = np.asarray(values, dtype=complex).copy()
    tol = PAIR_TOL * (1.0 + np.abs(v))
    near_real = np.abs(v.imag) <= tol
    v[near_real] = v[near_real].real
    upper = np.flatnonzero(v.imag > 0)
    lower = list(np.flatnonzero(v.imag < 0))
    for i in upper:
        if not lower:
            raise ConvergenceFailure("eigenvalues are not closed under conjugation")
        j = min(lower, key=lambda j: abs(v[j] - np.conj(v[i])))
        if abs(v[j] - np.conj(v[i])) > 1e-6 * (1.0 + abs(v[i])):
            raise ConvergenceFailure("eigenvalues are not closed under conjugation")
        lower.remove(j)
        mid = 0.5 * (v[i] + np.conj(v[j]))
        v[i], v[j] = mid, np.conj(mid)
    if lower:
        raise ConvergenceFailure("eigenvalues are not closed under conjugation")
    return v


def eigenvalues(kernel) -> Spectrum:
    a = as_matrix(kernel)
    try:
        vals = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise ConvergenceFailure(str(exc)) from exc
    return Spectrum(pair_conjugates(vals))


def _region_geometry(n: int):
    angle = math.pi / n
    return 0.5 / math.tan(angle), 0.5 / math.sin(angle)


def region_membership(spec, n: int) -> np.ndarray:
    """Which eigenvalues lie in the admissible region for an ``n x n`` DPP kernel.

    The region is the union of the two discs centred at
    ``1/2 +- i / (2 tan(pi/n))`` with radius ``1 / (2 sin(pi/n))``; for
    ``n = 1`` it is the interval ``[0, 1]``.
    """
    if n < 1:
        raise DomainError("n must be positive")
    v = spec.values if isinstance(spec, Spectrum) else np.asarray(spec, dtype=complex)
    if n == 1:
        return (np.abs(v.imag) <= REGION_TOL) & (v.real >= -REGION_TOL) & (v.real <= 1 + REGION_TOL)
    offset, radius = _region_geometry(n)
    up = np.abs(v - (0.5 + 1j * offset)) <= radius + REGION_TOL
    down = np.abs(v - (0.5 - 1j * offset)) <= radius + REGION_TOL
    return up | down


def lensemble_region_membership(spec, n: int) -> np.ndarray:
    """Which eigenvalues satisfy ``|arg(lambda)| <= pi - pi/n`` (zero always passes)."""
    v = spec.values if isinstance(spec, Spectrum) else np.asarray(spec, dtype=complex)
    if n == 1:
        return (np.abs(v.imag) <= REGION_TOL) & (v.real >= -REGION_TOL)
    ok = np.abs(np.angle(v)) <= math.pi - math.pi / n + REGION_TOL
    return ok | (np.abs(v) <= REGION_TOL)


def expected_and_variance(kernel) -> tuple[float, float]:
    """``(E|X|, Var|X|) = (tr K, tr K - tr K^2)``."""
    k = as_kernel(kernel, Role.CORRELATION).entries
    tr = float(np.trace(k))
    # tr(K^2) without forming the product
    tr2 = float(np.sum(k * k.T))
    return tr, tr - tr2


def _expand_linear_factors(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Real coefficients of ``prod_i (alpha_i + beta_i z)``, ascending in degree.

    ``alpha`` and ``beta`` come from a conjugate-closed spectrum; each
    conjugate pair is first combined into a real quadratic so the running
    product stays real.
    """
    coeffs = np.array([1.0])
    order = np.argsort(np.abs(beta), kind="stable")
    alpha, beta = alpha[order], beta[order]
    used = np.zeros(len(alpha), dtype=bool)
    for i in range(len(alpha)):
        if used[i]:
            continue
        used[i] = True
        if beta[i].imag == 0 and alpha[i].imag == 0:
            factor = np.array([alpha[i].real, beta[i].real])
        else:
            cands = np.flatnonzero(~used)
            j = cands[np.argmin(np.abs(beta[cands] - np.conj(beta[i])))]
            used[j] = True
            a, b = alpha[i], beta[i]
            factor = np.array([abs(a) ** 2, 2.0 * (a * np.conj(b)).real, abs(b) ** 2])
        coeffs = np.convolve(coeffs, factor)
    return coeffs


def elementary_symmetric(spec) -> np.ndarray:
    """``e_0, ..., e_n`` of the spectrum: the coefficients of ``prod (1 + lambda_i t)``."""
    v = spec.values if isinstance(spec, Spectrum) else pair_conjugates(spec)
    return _expand_linear_factors(np.ones(len(v), dtype=complex), v)


def factorial_moment(kernel, order: int) -> float:
    """``E[C(|X|, order)] = e_order(lambda_1, ..., lambda_n)``."""
    k = as_kernel(kernel, Role.CORRELATION).entries
    n = k.shape[0]
    if not 0 <= order <= n:
        raise DomainError(f"order must lie in [0, {n}]")
    if order == 0:
        return 1.0
    return float(elementary_symmetric(eigenvalues(k))[order])


def _finalize_pmf(coeffs: np.ndarray, spectrum) -> CardinalityLaw:
    if np.min(coeffs) < -REJECT_TOL:
        raise NonProbabilityOutput(
            f"cardinality coefficient {np.min(coeffs):.3e} is negative; kernel is not a DPP kernel"
        )
    pmf = np.clip(coeffs, 0.0, None)
    pmf = pmf / pmf.sum()
    return CardinalityLaw(pmf, spectrum)


def cardinality_law(kernel) -> CardinalityLaw:
    """Exact law of ``|X|`` from the spectrum of ``K``.

    ``sum_k P(|X| = k) z^k = det(I + (z - 1) K) = prod_i (1 - lambda_i + lambda_i z)``.
    Coefficients below zero by no more than ``1e-6`` are clamped and the pmf
    renormalized; anything more negative raises.
    """
    k = as_kernel(kernel, Role.CORRELATION).entries
    spec = eigenvalues(k)
    v = spec.values
    return _finalize_pmf(_expand_linear_factors(1.0 - v, v), spec)


@dataclass(frozen=True)
class Component:
    """Law of one independent summand of ``|X|``; ``pmf`` is over ``0..len(pmf)-1``."""

    pmf: tuple[float, ...]
    eigenvalue: complex


def bernoulli_decomposition(spec) -> list[Component]:
    """Independent summands whose total has the law of ``|X|``.

    Real eigenvalues give Bernoulli components; each conjugate pair ``mu``
    gives a three-point law ``(|mu - 1|^2, (1 - |2 mu - 1|^2) / 2, |mu|^2)``,
    valid when ``mu`` lies in the closed disc ``B(1/2, 1/2)``.
    """
    if not isinstance(spec, Spectrum):
        spec = Spectrum(pair_conjugates(spec))
    real, upper = spec.split()
    comps = []
    for lam in real:
        if lam < -REGION_TOL or lam > 1 + REGION_TOL:
            raise OutOfRegion(f"real eigenvalue {lam} outside [0, 1]")
        lam = min(max(lam, 0.0), 1.0)
        comps.append(Component((1.0 - lam, lam), complex(lam)))
    for mu in upper:
        if abs(2 * mu - 1) > 1 + REGION_TOL:
            raise OutOfRegion(f"eigenvalue {mu} lies outside the disc B(1/2, 1/2)")
        p0 = abs(mu - 1) ** 2
        p2 = abs(mu) ** 2
        p1 = 0.5 * (1 - abs(2 * mu - 1) ** 2)
        comps.append(Component((p0, max(p1, 0.0), p2), complex(mu)))
    return comps


def convolve_components(components) -> np.ndarray:
    out = np.array([1.0])
    for c in components:
        out = np.convolve(out, np.asarray(c.pmf))
    return out
