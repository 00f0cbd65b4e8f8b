"""Command-line interface: ``nsdpp <subcommand> ...``.

Exit codes: 0 success, 1 I/O or usage problem, 2 invalid kernel,
3 enumeration cap exceeded, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import constructions, couplings, sampling, simulation
from .errors import DomainError, NSDPPError
from .kernel import Role, read_mtxt, write_mtxt
from .oracle import enumerate_distribution
from .spectrum import cardinality_law, expected_and_variance
from .validation import certify


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _emit_json(data, out=None):
    text = json.dumps(data, indent=2, sort_keys=True, default=_json_default) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _write_text(path, text):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def cmd_validate(args) -> int:
    k = read_mtxt(args.kernel)
    rep = certify(k, Role(args.role), args.cap, args.seed, args.trials)
    _emit_json(rep.to_dict(), args.out)
    return 2 if rep.invalid else 0


def cmd_make(args) -> int:
    with open(args.params) as fh:
        params = json.load(fh)
    report = None
    if args.family == "companion":
        kern = constructions.companion_k(params["coeffs"])
    elif args.family == "rank1":
        spec = constructions.RankOneSpec(params["u"], params["v"], params.get("lambda", 1.0))
        kern, report = constructions.rank_one_kernel(spec)
    else:
        kern, report = constructions.half_identity_rank_one(params["u"], params["v"])
    write_mtxt(args.out, kern.entries, comment=f"family={args.family}")
    if report is not None:
        _emit_json(report.to_dict())
        return 2 if report.invalid else 0
    return 0


def cmd_couple(args) -> int:
    k = read_mtxt(args.kernel)
    mode = args.mode
    if mode == "independent":
        k2 = read_mtxt(args.kernel2) if args.kernel2 else k
        ck = couplings.independent_coupling(k, k2)
    elif mode == "complement":
        ck = couplings.complement_coupling(k)
    elif mode == "identical":
        ck = couplings.identical_coupling(k)
    elif mode == "split":
        ck = couplings.split_coupling(k, args.cap)
    else:
        spec = couplings.random_attractive_spec(k, np.random.default_rng(args.seed), args.mu_scale)
        ck = couplings.attractive_coupling(spec)
    write_mtxt(args.out, ck.full, comment=f"coupling mode={mode}; second process at indices n..2n-1")
    return 0


def samples_csv(batch: sampling.SampleBatch) -> str:
    lines = ["sample_id,members"]
    for s, row in enumerate(batch.indicators):
        lines.append(f"{s}," + " ".join(str(i) for i in np.flatnonzero(row)))
    return "\n".join(lines) + "\n"


def cmd_sample(args) -> int:
    k = read_mtxt(args.kernel)
    batch = sampling.sample_batch(k, args.num, args.seed, args.method, args.cap, args.threads)
    _write_text(args.out, samples_csv(batch))
    return 0


def cmd_cardinality(args) -> int:
    k = read_mtxt(args.kernel)
    law = cardinality_law(k)
    mean, var = expected_and_variance(k)
    spec = law.source_spectrum.values
    _emit_json({
        "mean": mean,
        "variance": var,
        "pmf": law.pmf.tolist(),
        "spectrum": [[float(z.real), float(z.imag)] for z in spec],
    }, args.out)
    return 0


def cmd_oracle(args) -> int:
    k = read_mtxt(args.kernel)
    table = enumerate_distribution(k, args.cap)
    lines = ["bitmask,probability"] + [f"{m},{p:.17g}" for m, p in enumerate(table.probs)]
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_grid_sim(args) -> int:
    cfg = simulation.SimulationConfig.from_json(args.config)
    res = simulation.run_coupled_simulation(cfg, args.out_dir, args.threads)
    _emit_json({"outputs": res.paths, "diagonal_cross_covariance_sum": res.diagonal_cross_covariance})
    return 0


def _parse_indices(text: str) -> list[int]:
    tokens = text.replace(",", " ").split()
    try:
        return [int(t) for t in tokens]
    except ValueError as exc:
        raise DomainError(f"bad index list {text!r}") from exc


def cmd_cond_map(args) -> int:
    ck = couplings.CouplingKernel(read_mtxt(args.coupling))
    if args.grid_k is not None:
        geom = simulation.GridGeometry(args.grid_k)
        simulation.check_grid_size(geom, ck)
        pts = geom.points
    else:
        pts = simulation.layout_points(ck.n)
    probs = simulation.conditional_inclusion_map(ck, _parse_indices(args.observed))
    _write_text(args.out, simulation.map_csv(probs, pts))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nsdpp", description="Nonsymmetric determinantal point processes.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="certify a kernel; JSON report")
    s.add_argument("--kernel", required=True)
    s.add_argument("--role", choices=["k", "l"], default="k")
    s.add_argument("--cap", type=int, default=None)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("make", help="build a kernel from a closed-form family")
    s.add_argument("--family", choices=["companion", "rank1", "half1"], required=True)
    s.add_argument("--params", required=True, help="JSON: coeffs | u, v[, lambda] | u, v")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_make)

    s = sub.add_parser("couple", help="build a 2n x 2n coupling kernel")
    s.add_argument("--mode", choices=["independent", "complement", "identical", "split", "attractive"],
                   required=True)
    s.add_argument("--kernel", required=True)
    s.add_argument("--kernel2", help="second marginal for --mode independent (default: same kernel)")
    s.add_argument("--mu-scale", type=float, default=1.0)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cap", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_couple)

    s = sub.add_parser("sample", help="draw exact samples")
    s.add_argument("--kernel", required=True)
    s.add_argument("--num", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--method", choices=[m.value for m in sampling.SamplerMethod], default="seq")
    s.add_argument("--cap", type=int, default=None)
    s.add_argument("--threads", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    s = sub.add_parser("cardinality", help="law of the number of points; JSON")
    s.add_argument("--kernel", required=True)
    s.add_argument("--out")
    s.set_defaults(func=cmd_cardinality)

    s = sub.add_parser("oracle", help="full subset probability table")
    s.add_argument("--kernel", required=True)
    s.add_argument("--cap", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_oracle)

    s = sub.add_parser("grid-sim", help="coupled grid simulation from a JSON config")
    s.add_argument("--config", required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--threads", type=int, default=None)
    s.set_defaults(func=cmd_grid_sim)

    s = sub.add_parser("cond-map", help="second-block inclusion probabilities given the first block")
    s.add_argument("--coupling", required=True)
    s.add_argument("--observed", default="", help="0-based indices of the first process")
    s.add_argument("--grid-k", type=int, default=None)
    s.add_argument("--out")
    s.set_defaults(func=cmd_cond_map)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors, which is reserved for invalid kernels
        return 0 if not exc.code else 1
    try:
        return args.func(args)
    except NSDPPError as exc:
        print(f"nsdpp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except (OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"nsdpp: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
