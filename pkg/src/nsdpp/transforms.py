"""Kernel-to-kernel maps: particle-hole, switching, principal pivot transform, thinning."""

from __future__ import annotations

import numpy as np

from .errors import DomainError, SingularPivot
from .kernel import Kernel, Role, as_kernel, as_matrix, indicator, l_to_k, subset

PIVOT_TOL = 1e-12


def particle_hole(kernel, s) -> Kernel:
    """Kernel of ``(X & ~S) | (~X & S)`` when ``X ~ DPP(K)``.

    Rows indexed by ``S`` are replaced by the matching rows of ``I - K``;
    the other rows are untouched.  Off-diagonal entries are negated exactly,
    so applying the map twice restores them bit for bit.  Diagonal entries
    go through ``1 - (1 - x)`` and come back within one rounding.
    """
    k = as_kernel(kernel, Role.CORRELATION).entries
    idx = list(subset(s, k.shape[0]))
    out = k.copy()
    out[idx, :] = -out[idx, :]
    out[idx, idx] = 1.0 - k[idx, idx]
    return Kernel(out, Role.CORRELATION)


def switching_kernel(kernel, p) -> Kernel:
    """``D(p)(I - K) + D(1 - p) K``: flip index ``i`` independently with probability ``p[i]``."""
    k = as_kernel(kernel, Role.CORRELATION).entries
    p = np.asarray(p, dtype=float)
    if p.shape != (k.shape[0],):
        raise DomainError(f"p must have length {k.shape[0]}")
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise DomainError("switching probabilities must lie in [0, 1]")
    out = (1.0 - 2.0 * p)[:, None] * k
    out[np.diag_indices_from(out)] += p
    return Kernel(out, Role.CORRELATION)


def ppt(m, s) -> np.ndarray:
    """Principal pivot transform of ``m`` relative to the index set ``s``.

    With ``S`` the pivot block and ``C`` its complement the result is::

        [ M_S^-1          -M_S^-1 M_SC            ]
        [ M_CS M_S^-1      M_C - M_CS M_S^-1 M_SC ]

    assembled back in the original index order.  It satisfies
    ``y = M x  <=>  (x_S, y_C) = ppt(M, S) (y_S, x_C)``.

    Raises
    ------
    SingularPivot
        If ``|det(M_S)| <= 1e-12 * max(1, ||M_S||_F)``.
    """
    a = as_matrix(m)
    n = a.shape[0]
    ind = indicator(s, n)
    si = np.flatnonzero(ind)
    ci = np.flatnonzero(~ind)
    if si.size == 0:
        return a.copy()
    block = a[np.ix_(si, si)]
    det = np.linalg.det(block)
    if abs(det) <= PIVOT_TOL * max(1.0, np.linalg.norm(block)):
        raise SingularPivot(f"pivot block is singular (det={det:.3e})")
    inv = np.linalg.inv(block)
    out = np.empty_like(a)
    out[np.ix_(si, si)] = inv
    if ci.size:
        b = a[np.ix_(si, ci)]
        c = a[np.ix_(ci, si)]
        out[np.ix_(si, ci)] = -inv @ b
        out[np.ix_(ci, si)] = c @ inv
        out[np.ix_(ci, ci)] = a[np.ix_(ci, ci)] - c @ inv @ b
    return out


def ppt_lensemble_particle_hole(kernel, s) -> Kernel:
    """L-ensemble kernel of the particle-hole image over ``s``: ``ppt(L, s)``.

    The result describes the same law as ``particle_hole(l_to_k(L), s)``
    whenever the latter admits an L-ensemble.  The conversion is attempted so
    a non-invertible ``I - K~`` surfaces as :class:`SingularConversion`.
    """
    ell = as_kernel(kernel, Role.LENSEMBLE)
    out = Kernel(ppt(ell.entries, s), Role.LENSEMBLE)
    l_to_k(out)
    return out


def thin(kernel, p: float) -> Kernel:
    """Kernel ``p K`` of the independent ``p``-thinning of ``DPP(K)``."""
    k = as_kernel(kernel, Role.CORRELATION).entries
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"retention probability {p} outside [0, 1]")
    return Kernel(p * k, Role.CORRELATION)
