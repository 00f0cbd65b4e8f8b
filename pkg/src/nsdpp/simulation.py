"""Coupled DPP simulations on a regular grid of the unit square."""

from __future__ import annotations

import enum
import io
import json
import math
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .couplings import CouplingKernel, attractive_coupling, random_attractive_spec
from .errors import DimMismatch, DomainError, IndexOutOfRange, PivotBreakdown, ProbabilityRange
from .kernel import Kernel, Role, write_mtxt
from .sampling import PIVOT_EPS, PROB_EPS, SampleBatch, pivot_update, sample_sequential_batch

CONFIG_SCHEMA = "nsdpp-config/1"


@dataclass(frozen=True)
class GridGeometry:
    """``(k + 1)^2`` points ``(c / k, r / k)``; index ``r * (k + 1) + c`` (row-major, rows bottom-up)."""

    k: int

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError("grid parameter k must be a positive integer")

    @property
    def n(self) -> int:
        return (self.k + 1) ** 2

    @property
    def points(self) -> np.ndarray:
        r, c = np.divmod(np.arange(self.n), self.k + 1)
        return np.column_stack([c / self.k, r / self.k])

    def distances(self) -> np.ndarray:
        p = self.points
        diff = p[:, None, :] - p[None, :, :]
        return np.sqrt(np.sum(diff * diff, axis=-1))


class RadialFamily(enum.Enum):
    GAUSSIAN = "gaussian"
    CAUCHY = "cauchy"


@dataclass(frozen=True)
class RadialKernelSpec:
    """``K_ij = f(|P_i - P_j|)``.

    Gaussian: ``amplitude * exp(-d^2 / scale)``.
    Cauchy: ``amplitude * (1 + (d / scale)^2)^(-exponent)``.
    """

    family: RadialFamily
    amplitude: float
    scale: float
    exponent: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "family", RadialFamily(self.family))
        if not 0.0 <= self.amplitude <= 1.0:
            raise DomainError("amplitude must lie in [0, 1]")
        if not self.scale > 0:
            raise DomainError("scale must be positive")
        if self.family is RadialFamily.CAUCHY:
            if self.exponent is None or not self.exponent > 0:
                raise DomainError("the Cauchy family needs a positive exponent")
        elif self.exponent is not None:
            raise DomainError("the Gaussian family takes no exponent")

    @classmethod
    def gaussian(cls, amplitude: float = 0.02, scale: float = 0.018):
        return cls(RadialFamily.GAUSSIAN, amplitude, scale)

    @classmethod
    def cauchy(cls, amplitude: float = 0.02, scale: float = 0.075, exponent: float = 1.1):
        return cls(RadialFamily.CAUCHY, amplitude, scale, exponent)

    def profile(self, d) -> np.ndarray:
        d = np.asarray(d, dtype=float)
        if self.family is RadialFamily.GAUSSIAN:
            return self.amplitude * np.exp(-(d * d) / self.scale)
        return self.amplitude * (1.0 + (d / self.scale) ** 2) ** (-self.exponent)


def grid_kernel(geom: GridGeometry, spec: RadialKernelSpec) -> Kernel:
    return Kernel(spec.profile(geom.distances()), Role.CORRELATION)


def conditional_inclusion_map(ck: CouplingKernel, observed) -> np.ndarray:
    """``P(j in X2 | X1 = observed)`` for every ``j``.

    The first block is conditioned on the full observation: index ``i`` is
    pivoted as included when ``i`` is observed and as excluded otherwise.

    Raises
    ------
    PivotBreakdown
        If the observation has probability zero under the coupling.
    """
    n = ck.n
    obs = np.zeros(n, dtype=bool)
    idx = np.asarray(list(observed), dtype=int)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexOutOfRange(f"observed indices must lie in range({n})")
    obs[idx] = True
    a = np.array(ck.full, dtype=float)[None]
    for i in range(n):
        d = a[0, i, i] - (0.0 if obs[i] else 1.0)
        if abs(d) < PIVOT_EPS:
            raise PivotBreakdown(f"observation has probability zero (pivot at index {i})")
        pivot_update(a, i, obs[i : i + 1])
    diag = np.diag(a[0])[n:]
    if np.any((diag < -PROB_EPS) | (diag > 1 + PROB_EPS)):
        raise ProbabilityRange("conditional inclusion probabilities fall outside [0, 1]")
    return np.clip(diag, 0.0, 1.0)


@dataclass
class SimulationConfig:
    """JSON-serializable description of a coupled grid simulation."""

    k: int = 30
    family: str = "gaussian"
    amplitude: float = 0.02
    scale: float | None = None
    exponent: float | None = None
    mu_scale: float = 1.0
    seed: int = 0
    num_samples: int = 1
    schema: str = CONFIG_SCHEMA

    @classmethod
    def from_dict(cls, data: dict) -> "SimulationConfig":
        data = dict(data)
        if data.get("schema") != CONFIG_SCHEMA:
            raise DomainError(f"config schema must be {CONFIG_SCHEMA!r}, got {data.get('schema')!r}")
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise DomainError(f"unknown config fields: {sorted(unknown)}")
        cfg = cls(**data)
        if cfg.num_samples < 1:
            raise DomainError("num_samples must be positive")
        return cfg

    @classmethod
    def from_json(cls, path) -> "SimulationConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    def kernel_spec(self) -> RadialKernelSpec:
        fam = RadialFamily(self.family)
        if fam is RadialFamily.GAUSSIAN:
            return RadialKernelSpec.gaussian(self.amplitude, 0.018 if self.scale is None else self.scale)
        return RadialKernelSpec.cauchy(
            self.amplitude,
            0.075 if self.scale is None else self.scale,
            1.1 if self.exponent is None else self.exponent,
        )


@dataclass
class SimulationResult:
    geometry: GridGeometry
    coupling: CouplingKernel
    samples: SampleBatch
    conditional_map: np.ndarray
    diagonal_cross_covariance: float
    paths: dict = field(default_factory=dict)

    def set_indices(self, s: int = 0) -> tuple[np.ndarray, np.ndarray]:
        n = self.geometry.n
        ind = self.samples.indicators[s]
        return np.flatnonzero(ind[:n]), np.flatnonzero(ind[n:])

    def coincident(self, s: int = 0) -> np.ndarray:
        a, b = self.set_indices(s)
        return np.intersect1d(a, b)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def points_csv(result: SimulationResult) -> str:
    pts = result.geometry.points
    out = io.StringIO()
    out.write("sample_id,set_id,index,x,y\n")
    for s in range(len(result.samples)):
        for set_id, members in enumerate(result.set_indices(s), start=1):
            for i in members:
                out.write(f"{s},{set_id},{i},{_fmt(pts[i, 0])},{_fmt(pts[i, 1])}\n")
    return out.getvalue()


def map_csv(probs, points) -> str:
    out = io.StringIO()
    out.write("index,x,y,probability\n")
    for i, p in enumerate(probs):
        out.write(f"{i},{_fmt(points[i, 0])},{_fmt(points[i, 1])},{p:.17g}\n")
    return out.getvalue()


def scatter_svg(points: np.ndarray, set1, set2, title: str = "", size: int = 480) -> str:
    """Self-contained SVG scatter; indices in both sets get the ``both`` class (red)."""
    margin = 20
    span = size - 2 * margin
    both = set(int(i) for i in np.intersect1d(set1, set2))
    lines = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size + 24}" '
        f'viewBox="0 0 {size} {size + 24}">',
        "<style>.set1{fill:#1f77b4}.set2{fill:#ff7f0e}.both{fill:#d62728}"
        ".frame{fill:none;stroke:#999}text{font:12px sans-serif}</style>",
        f'<rect class="frame" x="{margin}" y="{margin}" width="{span}" height="{span}"/>',
    ]
    for cls, members in (("set1", set1), ("set2", set2), ("both", sorted(both))):
        lines.append(f'<g class="{cls}">')
        for i in members:
            i = int(i)
            if cls != "both" and i in both:
                continue
            x = margin + points[i, 0] * span
            y = margin + (1.0 - points[i, 1]) * span
            lines.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="3"/>')
        lines.append("</g>")
    legend = f"set 1: {len(set1)}  set 2: {len(set2)}  both: {len(both)}"
    if title:
        legend = f"{title}  {legend}"
    lines.append(f'<text x="{margin}" y="{size + 14}">{legend}</text>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def build_coupling(config: SimulationConfig) -> tuple[GridGeometry, CouplingKernel]:
    geom = GridGeometry(config.k)
    k = grid_kernel(geom, config.kernel_spec())
    spec = random_attractive_spec(k.entries, np.random.default_rng(config.seed), config.mu_scale)
    return geom, attractive_coupling(spec)


def run_coupled_simulation(config: SimulationConfig | dict, out_dir=None,
                           threads: int | None = None) -> SimulationResult:
    """Grid kernel, attractive coupling, samples and conditional map of the first sample.

    When ``out_dir`` is given, writes ``points.csv``, ``coupling.mtxt``,
    ``scatter.svg`` (first sample), ``conditional_map.csv`` and
    ``summary.json`` there.
    """
    if isinstance(config, dict):
        config = SimulationConfig.from_dict(config)
    geom, ck = build_coupling(config)
    samples = sample_sequential_batch(ck.full, config.num_samples, config.seed, threads)
    n = geom.n
    first = np.flatnonzero(samples.indicators[0, :n])
    cmap = conditional_inclusion_map(ck, first)
    result = SimulationResult(geom, ck, samples, cmap, float(np.sum(-np.diag(ck.M) * np.diag(ck.N))))
    if out_dir is not None:
        write_artifacts(result, config, out_dir)
    return result


def write_artifacts(result: SimulationResult, config: SimulationConfig, out_dir) -> dict:
    os.makedirs(out_dir, exist_ok=True)
    paths = {name: os.path.join(out_dir, name) for name in
             ("points.csv", "coupling.mtxt", "scatter.svg", "conditional_map.csv", "summary.json")}
    pts = result.geometry.points
    set1, set2 = result.set_indices(0)
    with open(paths["points.csv"], "w", newline="") as fh:
        fh.write(points_csv(result))
    write_mtxt(paths["coupling.mtxt"], result.coupling.full,
               comment=f"coupling kernel, grid k={config.k}, {config.family}, seed={config.seed}")
    with open(paths["scatter.svg"], "w") as fh:
        fh.write(scatter_svg(pts, set1, set2, title=f"{config.family} k={config.k} seed={config.seed}"))
    with open(paths["conditional_map.csv"], "w", newline="") as fh:
        fh.write(map_csv(result.conditional_map, pts))
    summary = {
        "config": config.to_dict(),
        "n": result.geometry.n,
        "diagonal_cross_covariance_sum": result.diagonal_cross_covariance,
        "sizes": [[int(len(a)), int(len(b))] for a, b in
                  (result.set_indices(s) for s in range(len(result.samples)))],
        "coincident": [[int(i) for i in result.coincident(s)] for s in range(len(result.samples))],
    }
    with open(paths["summary.json"], "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    result.paths = paths
    return paths


def layout_points(n: int) -> np.ndarray:
    """Grid coordinates when ``n`` is a square ``(k + 1)^2`` with ``k >= 1``, else ``(i, 0)``."""
    side = math.isqrt(n)
    if side >= 2 and side * side == n:
        return GridGeometry(side - 1).points
    return np.column_stack([np.arange(n, dtype=float), np.zeros(n)])


def check_grid_size(geom: GridGeometry, ck: CouplingKernel) -> None:
    if geom.n != ck.n:
        raise DimMismatch(f"grid has {geom.n} points but the coupling has n={ck.n}")
