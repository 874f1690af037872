"""Command-line entry point: ``ropedecomp {analyze,probe,optimize,converge}``.

Every run writes its data files (CSV with 17 significant digits, JSON) plus
a separate ``*.manifest.json`` holding the command, flags, seed, tool
version, input hash, timestamp and the sha256 of each data file. Keeping the
timestamp out of the data files makes repeated seeded runs byte-identical.

Exit codes: 0 success, 2 invalid input, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .approx import ParamCurveSpec, convergence_study
from .curve import PolygonalCurve, load_curve, save_curve
from .invariants import CSV_HEADER, InequalityViolation, comparison_check, report
from .optimize import AnnealConfig, Objective, anneal
from .probe import (DegenerateDirectionError, DirectionGrid, distortion,
                    distortion_bounds_report, trunk_sweep)
from .size import CenterSolverError, QuadratureConfig, SizeFunctionalSpec, min_enclosing_radius
from .thickness import polygonal_thickness

log = logging.getLogger("ropedecomp")

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3

NUMERIC_ERRORS = (InequalityViolation, CenterSolverError, DegenerateDirectionError,
                  FloatingPointError, ZeroDivisionError, OverflowError)


@dataclass
class RunManifest:
    command: str
    flags: dict
    seed: int
    version: str
    input_sha256: str | None
    timestamp: str
    outputs: dict = field(default_factory=dict)

    def write(self, path: Path) -> None:
        path.write_text(json.dumps(asdict(self), indent=1, sort_keys=True) + "\n")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _json_safe(obj):
    if isinstance(obj, dict):
        return {str(k): _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _json_safe(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_json_safe(data), indent=1, sort_keys=True) + "\n")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _functionals(text: str) -> list[SizeFunctionalSpec]:
    try:
        return [SizeFunctionalSpec.parse(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _functional(text: str) -> SizeFunctionalSpec:
    try:
        return SizeFunctionalSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _curve_spec(text: str) -> ParamCurveSpec:
    try:
        return ParamCurveSpec.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _flag(v):
    if isinstance(v, (list, tuple)):
        return [_flag(x) for x in v]
    if v is None or isinstance(v, (bool, int, float, str)):
        return v
    return str(v)


class _Run:
    """Output bookkeeping shared by all commands."""

    def __init__(self, args, input_path=None):
        self.args = args
        self.out_dir = Path(args.out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        flags = {k: _flag(v) for k, v in vars(args).items() if k != "func"}
        self.manifest = RunManifest(
            command=args.command,
            flags=_json_safe(flags),
            seed=args.seed,
            version=__version__,
            input_sha256=_sha256(input_path) if input_path else None,
            timestamp=datetime.now(timezone.utc).isoformat(),
        )

    def path(self, name) -> Path:
        p = Path(name)
        return p if p.is_absolute() or p.parent != Path(".") else self.out_dir / p

    def record(self, path: Path) -> None:
        self.manifest.outputs[str(path)] = _sha256(path)

    def finish(self, stem: str) -> Path:
        mpath = self.out_dir / f"{stem}.manifest.json"
        self.manifest.write(mpath)
        return mpath


def _stem(path) -> str:
    return Path(path).stem


# ------------------------------------------------------------------ analyze

def cmd_analyze(args) -> int:
    curve = load_curve(args.curve)
    run = _Run(args, args.curve)
    stem = f"{_stem(args.curve)}_analyze"
    qcfg = QuadratureConfig(points_per_edge=args.quad_points)

    tb = polygonal_thickness(curve)
    reports = [report(curve, f, qcfg, thickness=tb.thickness) for f in args.functional]
    csv_path = run.path(f"{stem}.csv")
    write_csv(csv_path, CSV_HEADER, [r.csv_row() for r in reports])
    run.record(csv_path)

    cmp_ = comparison_check(curve, thickness=tb.thickness)
    est = distortion(curve, args.samples)
    bounds = distortion_bounds_report(curve, args.samples, est)

    lines = [f"curve: {curve.name or _stem(args.curve)} (n={curve.n}, "
             f"knot type {curve.knot_type or 'unknown'})",
             "",
             "thickness",
             f"  MinRad            {tb.min_rad:.17g} (vertex {tb.min_rad_vertex})",
             f"  dcsd              {tb.dcsd:.17g} (witness {tb.dcsd_witness})",
             f"  min pair distance {tb.min_pair_distance:.17g}",
             f"  Thi               {tb.thickness:.17g}",
             "",
             "invariants"]
    for r in reports:
        lines.append(f"  {str(r.functional):10s} D={r.d_value:.12g} rho={r.rho:.12g} "
                     f"crad={r.crad:.12g} pack={r.pack:.12g} rop={r.rop:.12g} "
                     f"residual={r.factorization_residual:.3e}")
    lines += ["",
              "comparison (diam/2 <= R_min <= diam)",
              f"  Len/diam={cmp_.len_over_diam:.12g} <= Len/R_min={cmp_.len_over_rmin:.12g} "
              f"<= 2 Len/diam={cmp_.two_len_over_diam:.12g}",
              f"  diam/2Thi={cmp_.half_diam_over_thi:.12g} <= R_min/Thi={cmp_.rmin_over_thi:.12g} "
              f"<= diam/Thi={cmp_.diam_over_thi:.12g}",
              "",
              "distortion",
              f"  estimate (lower bound) {bounds.distortion:.12g} at {est.witness}",
              f"  Len/(2 diam)           {bounds.len_over_2diam:.12g}",
              f"  Len/(4 R_min)          {bounds.len_over_4rmin:.12g}"]
    text = "\n".join(lines) + "\n"
    txt_path = run.path(f"{stem}.txt")
    txt_path.write_text(text)
    run.record(txt_path)
    sys.stdout.write(text)
    run.finish(stem)
    return EXIT_OK


# -------------------------------------------------------------------- probe

def cmd_probe(args) -> int:
    curve = load_curve(args.curve)
    run = _Run(args, args.curve)
    stem = f"{_stem(args.curve)}_probe"

    grid = DirectionGrid.fibonacci(args.grid)
    prof = trunk_sweep(curve, grid, refine_levels=args.refine)
    trunk_path = run.path(f"{stem}_trunk.csv")
    write_csv(trunk_path, ["vx", "vy", "vz", "multiplicity"],
              [(*d, int(m)) for d, m in zip(prof.directions, prof.multiplicities)])
    run.record(trunk_path)

    est = distortion(curve, args.samples)
    bounds = distortion_bounds_report(curve, args.samples, est)
    r_min = min_enclosing_radius(curve)[0]
    thi = polygonal_thickness(curve).thickness
    summary = {
        "curve": curve.name or _stem(args.curve),
        "n": curve.n,
        "grid": grid.kind,
        "directions_evaluated": int(len(prof.directions)),
        "trunk_upper_bound": prof.min_v,
        "trunk_direction": prof.min_direction,
        "strunk_lower_bound": prof.max_v,
        "strunk_direction": prof.max_direction,
        "crad_rmin_squared": (r_min / thi) ** 2,
        "distortion_lower_bound": est.value,
        "distortion_witness": est.witness,
        "len_over_2diam": bounds.len_over_2diam,
        "len_over_4rmin": bounds.len_over_4rmin,
    }
    sum_path = run.path(f"{stem}.json")
    write_json(sum_path, summary)
    run.record(sum_path)
    print(f"trunk <= {prof.min_v}, strunk >= {prof.max_v}, "
          f"CRad_R^2 = {summary['crad_rmin_squared']:.12g}, distortion >= {est.value:.12g}")
    run.finish(stem)
    return EXIT_OK


# ----------------------------------------------------------------- optimize

TRACE_HEADER = ["chain", "step", "value", "temperature", "accepted"]


def _trace_rows(chains):
    for k, c in enumerate(chains):
        t = c.trace
        for step, value, temp, acc in zip(t["step"].tolist(), t["value"].tolist(),
                                          t["temperature"].tolist(), t["accepted"].tolist()):
            yield k, step, value, temp, acc


def cmd_optimize(args) -> int:
    curve = load_curve(args.curve)
    run = _Run(args, args.curve)
    stem = f"{_stem(args.curve)}_optimize"
    cfg = AnnealConfig(objective=Objective(args.objective), steps=args.steps,
                       initial_temperature=args.initial_temperature,
                       cooling_rate=args.cooling_rate, step_sigma=args.step_sigma,
                       seed=args.seed, renormalize_every=args.renormalize_every,
                       chains=args.chains)
    res = anneal(curve, args.functional, cfg, workers=args.threads, track=False)

    out_path = run.path(args.out or f"{stem}_best.json")
    save_curve(res.best_curve, out_path)
    run.record(out_path)
    trace_path = run.path(args.trace or f"{stem}_trace.csv")
    write_csv(trace_path, TRACE_HEADER, _trace_rows(res.chains))
    run.record(trace_path)

    rows = []
    for k, c in enumerate(res.chains):
        rows.append((k, c.initial_value, c.best_value, c.best_step, c.accepted,
                     c.moves_rejected_isotopy, c.moves_rejected_prefilter, c.frozen_epochs))
    chains_path = run.path(f"{stem}_chains.csv")
    write_csv(chains_path, ["chain", "initial_value", "best_value", "best_step", "accepted",
                            "rejected_isotopy", "rejected_prefilter", "frozen_epochs"], rows)
    run.record(chains_path)
    rep_path = run.path(f"{stem}_report.csv")
    write_csv(rep_path, CSV_HEADER, [res.final_report.csv_row()])
    run.record(rep_path)

    r = res.final_report
    print(f"best {cfg.objective.value} = {res.best_value:.12g} (chain {res.best_chain}); "
          f"rop={r.rop:.12g} rho={r.rho:.12g} crad={r.crad:.12g}")
    run.finish(stem)
    return EXIT_OK


# ----------------------------------------------------------------- converge

CONVERGE_HEADER = ["n", "d", "thi", "crad", "pack", "rho", "rop", "residual", "crad_increment"]


def cmd_converge(args) -> int:
    run = _Run(args)
    stem = "converge"
    qcfg = QuadratureConfig(points_per_edge=args.quad_points)
    table = convergence_study(args.curve, args.functional, args.n, qcfg, workers=args.threads)
    inc = [math.nan, *table.crad_increments.tolist()]
    rows = [(r.n, r.d_value, r.thickness, r.crad, r.pack, r.rho, r.rop, r.residual, d)
            for r, d in zip(table.rows, inc)]
    path = run.path(args.out or f"{stem}.csv")
    write_csv(path, CONVERGE_HEADER, rows)
    run.record(path)
    last = table.rows[-1]
    print(f"{args.curve} {args.functional}: n={last.n} crad={last.crad:.12g} "
          f"rho={last.rho:.12g} rop={last.rop:.12g}")
    run.finish(Path(path).stem)
    return EXIT_OK


# -------------------------------------------------------------------- main

def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--out-dir", default=".", help="directory for output files")
    shared.add_argument("--seed", type=int, default=0, help="root seed for all randomness")
    shared.add_argument("--threads", type=int, default=1,
                        help="worker processes for chains or convergence rows")

    p = argparse.ArgumentParser(prog="ropedecomp",
                                description="Ropelength decomposition toolkit for polygonal knots")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", parents=[shared], help="invariants of one curve")
    a.add_argument("curve", help="curve JSON file")
    a.add_argument("--functional", type=_functionals, default=_functionals("diam,rmin"),
                   help="comma-separated size functionals, e.g. diam,rmin,rp:2,star")
    a.add_argument("--samples", type=int, default=16, help="distortion samples per edge")
    a.add_argument("--quad-points", type=int, default=8, help="quadrature nodes per edge")
    a.set_defaults(func=cmd_analyze)

    pr = sub.add_parser("probe", parents=[shared], help="trunk profile and distortion")
    pr.add_argument("curve", help="curve JSON file")
    pr.add_argument("--grid", type=int, default=2048, help="number of sphere directions")
    pr.add_argument("--samples", type=int, default=16, help="distortion samples per edge")
    pr.add_argument("--refine", type=int, default=1, help="cap refinement levels")
    pr.set_defaults(func=cmd_probe)

    o = sub.add_parser("optimize", parents=[shared], help="knot-type-preserving annealing")
    o.add_argument("curve", help="starting curve JSON file")
    o.add_argument("--objective", choices=[x.value for x in Objective], default="rop")
    o.add_argument("--functional", type=_functional, default=_functional("diam"))
    o.add_argument("--steps", type=int, default=10_000)
    o.add_argument("--chains", type=int, default=1)
    o.add_argument("--step-sigma", type=float, default=0.02,
                   help="move size as a fraction of the current diameter")
    o.add_argument("--cooling-rate", type=float, default=0.995)
    o.add_argument("--initial-temperature", type=float, default=None,
                   help="default: 0.1 * objective of the start curve")
    o.add_argument("--renormalize-every", type=int, default=0)
    o.add_argument("--out", default=None, help="best curve JSON (default in --out-dir)")
    o.add_argument("--trace", default=None, help="trace CSV (default in --out-dir)")
    o.set_defaults(func=cmd_optimize)

    c = sub.add_parser("converge", parents=[shared], help="inscribed-polygon convergence study")
    c.add_argument("--curve", type=_curve_spec, default=_curve_spec("circle"),
                   help="circle, circle:<r> or torus:p,q,R,r")
    c.add_argument("--functional", type=_functional, default=_functional("diam"))
    c.add_argument("--n", type=_int_list, default=_int_list("16,32,64,128,256,512,1024"),
                   help="comma-separated vertex counts")
    c.add_argument("--quad-points", type=int, default=8, help="quadrature nodes per edge")
    c.add_argument("--out", default=None, help="table CSV (default converge.csv in --out-dir)")
    c.set_defaults(func=cmd_converge)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad flags, which is our validation code too
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except NUMERIC_ERRORS as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
