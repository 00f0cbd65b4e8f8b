"""Kernel data model, subset plumbing and exact subset probabilities.

Indices are 0-based everywhere in code and in serialized output.  A subset of
``range(n)`` is either a sorted tuple of indices or, for whole-table work, an
integer bitmask where bit ``i`` is set iff ``i`` belongs to the subset.
"""

from __future__ import annotations

import enum
import io
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import CapExceeded, DimMismatch, DomainError, SingularConversion

DEFAULT_CAP = 16
# refuse conversions once 1/|det(I -/+ K)| exceeds this
CONDITION_CAP = 1e12
_CHUNK_ENTRIES = 1 << 22


class Role(enum.Enum):
    CORRELATION = "k"
    LENSEMBLE = "l"


@dataclass(frozen=True, eq=False)
class Kernel:
    """A dense real ``n x n`` kernel tagged with its role.

    ``Role.CORRELATION`` holds a marginal (inclusion) kernel ``K`` with
    ``P(S in X) = det(K_S)``; ``Role.LENSEMBLE`` holds ``L`` with
    ``P(X = S)`` proportional to ``det(L_S)``.  The entries are stored as a
    read-only float array.
    """

    entries: np.ndarray
    role: Role = Role.CORRELATION

    def __post_init__(self):
        a = np.array(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise DomainError(f"kernel must be a non-empty square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise DomainError("kernel entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.entries
        return self.entries.astype(dtype)

    def __repr__(self):
        return f"Kernel(n={self.n}, role={self.role.name})"


def as_kernel(obj, role: Role = Role.CORRELATION) -> Kernel:
    """Coerce ``obj`` to a :class:`Kernel` with the requested role."""
    if isinstance(obj, Kernel):
        if obj.role is not role:
            raise DomainError(f"expected a {role.name} kernel, got {obj.role.name}")
        return obj
    return Kernel(obj, role)


def as_matrix(obj) -> np.ndarray:
    if isinstance(obj, Kernel):
        return obj.entries
    a = np.asarray(obj, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {a.shape}")
    return a


def tau_det(k) -> float:
    """Nonnegativity tolerance used for minors and subset probabilities."""
    a = as_matrix(k)
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    return 1e-9 * scale * a.shape[0]


def subset(s: Iterable[int], n: int) -> tuple[int, ...]:
    """Validate a subset of ``range(n)`` and return it as a sorted tuple."""
    members = tuple(sorted(int(i) for i in s))
    if len(set(members)) != len(members):
        raise DomainError(f"duplicate indices in subset {members}")
    if members and (members[0] < 0 or members[-1] >= n):
        raise DomainError(f"subset {members} not contained in range({n})")
    return members


def indicator(s: Iterable[int], n: int) -> np.ndarray:
    ind = np.zeros(n, dtype=bool)
    ind[list(subset(s, n))] = True
    return ind


def to_mask(s: Iterable[int]) -> int:
    mask = 0
    for i in s:
        mask |= 1 << int(i)
    return mask


def from_mask(mask: int, n: int) -> tuple[int, ...]:
    return tuple(i for i in range(n) if mask >> i & 1)


def mask_bits(n: int) -> np.ndarray:
    """Boolean table of shape ``(2**n, n)``; row ``s`` is the indicator of bitmask ``s``."""
    masks = np.arange(1 << n, dtype=np.int64)
    return (masks[:, None] >> np.arange(n)) & 1 == 1


def check_cap(n: int, cap: int | None) -> None:
    cap = DEFAULT_CAP if cap is None else cap
    if n > cap:
        raise CapExceeded(f"n={n} exceeds the enumeration cap {cap}")


def principal_minor(kernel, s: Iterable[int]) -> float:
    """Determinant of the principal submatrix indexed by ``s``; 1 for the empty set."""
    a = as_matrix(kernel)
    idx = list(subset(s, a.shape[0]))
    if not idx:
        return 1.0
    return float(np.linalg.det(a[np.ix_(idx, idx)]))


def _check_conversion(m: np.ndarray, what: str) -> None:
    d = np.linalg.det(m)
    if not np.isfinite(d) or abs(d) * CONDITION_CAP < 1.0:
        raise SingularConversion(f"{what} is numerically singular (det={d:.3e})")


def k_to_l(kernel) -> Kernel:
    """``L = K (I - K)^{-1}``."""
    k = as_kernel(kernel, Role.CORRELATION).entries
    ik = np.eye(k.shape[0]) - k
    _check_conversion(ik, "I - K")
    # K (I-K)^{-1} = (I-K)^{-1} - I; solve on the transpose to avoid forming the inverse
    ell = np.linalg.solve(ik.T, k.T).T
    return Kernel(ell, Role.LENSEMBLE)


def l_to_k(kernel) -> Kernel:
    """``K = L (I + L)^{-1}``."""
    ell = as_kernel(kernel, Role.LENSEMBLE).entries
    il = np.eye(ell.shape[0]) + ell
    _check_conversion(il, "I + L")
    k = np.linalg.solve(il.T, ell.T).T
    return Kernel(k, Role.CORRELATION)


def set_probability(kernel, s: Iterable[int]) -> float:
    """``P(X = S)`` for ``X ~ DPP(K)``.

    Uses the determinant of the matrix whose rows indexed by ``S`` come from
    ``K`` and whose remaining rows come from ``I - K``.
    """
    k = as_kernel(kernel, Role.CORRELATION).entries
    n = k.shape[0]
    ind = indicator(s, n)
    a = np.where(ind[:, None], k, np.eye(n) - k)
    return float(np.linalg.det(a))


def row_mixture_dets(inside: np.ndarray, outside: np.ndarray) -> np.ndarray:
    """For every bitmask ``s`` the determinant of the row mixture.

    Row ``i`` of the mixed matrix is ``inside[i]`` when bit ``i`` of ``s`` is
    set and ``outside[i]`` otherwise.  Returns an array of length ``2**n`` in
    bitmask order.
    """
    n = inside.shape[0]
    total = 1 << n
    out = np.empty(total)
    chunk = max(1, _CHUNK_ENTRIES // (n * n))
    shifts = np.arange(n)
    for start in range(0, total, chunk):
        masks = np.arange(start, min(total, start + chunk), dtype=np.int64)
        bits = (masks[:, None] >> shifts) & 1 == 1
        mats = np.where(bits[:, :, None], inside[None], outside[None])
        out[start : start + len(masks)] = np.linalg.det(mats)
    return out


def all_principal_minors(m, cap: int | None = None) -> np.ndarray:
    """``det(M_S)`` for every subset in bitmask order.

    Replacing the rows outside ``S`` by identity rows leaves a matrix whose
    determinant is exactly the principal minor on ``S``.
    """
    a = as_matrix(m)
    check_cap(a.shape[0], cap)
    return row_mixture_dets(a, np.eye(a.shape[0]))


def sum_minor_identity_check(m, cap: int | None = None) -> float:
    """``|sum_S det(M_S) - det(I + M)|``, a self-test of the determinant plumbing."""
    a = as_matrix(m)
    minors = all_principal_minors(a, cap)
    return float(abs(minors.sum() - np.linalg.det(np.eye(a.shape[0]) + a)))


def read_mtxt(source) -> np.ndarray:
    """Read a matrix in MTXT format from a path or a text stream.

    First non-comment line holds ``n``, followed by ``n`` rows of ``n`` reals.
    Lines starting with ``#`` are ignored.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source) as fh:
            text = fh.read()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise DomainError("empty MTXT input")
    try:
        n = int(lines[0].split()[0])
    except ValueError as exc:
        raise DomainError(f"bad MTXT header: {lines[0]!r}") from exc
    rows = lines[1:]
    if len(rows) != n:
        raise DimMismatch(f"MTXT declares n={n} but has {len(rows)} rows")
    try:
        values = [[float(x) for x in row.split()] for row in rows]
    except ValueError as exc:
        raise DomainError(f"non-numeric MTXT entry: {exc}") from exc
    if any(len(row) != n for row in values):
        raise DimMismatch(f"MTXT rows do not form a {n}x{n} matrix")
    a = np.array(values, dtype=float).reshape(n, n)
    if a.shape != (n, n):
        raise DimMismatch(f"MTXT rows do not form a {n}x{n} matrix")
    return a


def write_mtxt(target, matrix, comment: str | None = None) -> None:
    """Write ``matrix`` in MTXT format to a path or a text stream."""
    a = as_matrix(matrix)
    buf = io.StringIO()
    buf.write("# nsdpp MTXT matrix; indices are 0-based\n")
    if comment:
        for line in comment.splitlines():
            buf.write(f"# {line}\n")
    buf.write(f"{a.shape[0]}\n")
    np.savetxt(buf, a, fmt="%.17g")
    if hasattr(target, "write"):
        target.write(buf.getvalue())
    else:
        with open(target, "w") as fh:
            fh.write(buf.getvalue())
