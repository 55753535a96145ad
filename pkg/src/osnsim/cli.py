"""Command-line entry point: ``osnsim {simulate,predict,sweep,validate-dataset}``."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from .dataset import (
    MIN_BIN_DENOMINATOR,
    MIN_DEGREE_COUNT,
    NORTH_AMERICA,
    degree_histogram,
    fit_degree_exponent,
    fit_formation_exponent,
    locate_users,
    parse_checkins,
    parse_edges,
    population_distance_experiment,
)
from .experiments import MEASUREMENTS, PATTERNS, SweepPlan, build_graph, resolve_threads, run_sweep, run_trial
from .model import ModelConfig
from .tables import predict_measurement

PLAN_SCHEMA = {
    "type": "object",
    "required": ["n_ladder", "replicates", "gamma", "beta"],
    "additionalProperties": False,
    "properties": {
        "n_ladder": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 4},
        "replicates": {"type": "integer", "minimum": 3},
        "gamma": {"type": "number", "minimum": 0},
        "beta": {"type": "number", "minimum": 0},
        "phi": {"type": ["number", "null"], "minimum": 0},
        "pattern": {"enum": list(PATTERNS)},
        "measurement": {"enum": list(MEASUREMENTS)},
        "seed": {"type": "integer", "minimum": 0},
        "tolerance": {"type": "number", "exclusiveMinimum": 0},
        "fit_log_term": {"type": "boolean"},
    },
}


class CliError(Exception):
    pass


def _nonneg_float(name):
    def parse(text):
        try:
            v = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be a number, got {text!r}") from None
        if not v >= 0:
            raise argparse.ArgumentTypeError(f"{name} must be >= 0, got {text}")
        return v

    return parse


def _positive_int(name):
    def parse(text):
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{name} must be an integer, got {text!r}") from None
        if v < 1:
            raise argparse.ArgumentTypeError(f"{name} must be >= 1, got {text}")
        return v

    return parse


def _emit(doc, out: str | None) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if out in (None, "-"):
        print(text)
    else:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text + "\n")


def _require_phi(parser, args):
    if args.pattern == "multicast" and args.phi is None:
        parser.error("--phi is required with --pattern multicast")


# --- commands -------------------------------------------------------------------


def cmd_simulate(args, parser) -> int:
    _require_phi(parser, args)
    if args.n < 2:
        parser.error(f"--n must be >= 2, got {args.n}")
    config = ModelConfig(args.n, args.gamma, args.beta, args.phi or 0.0, args.seed)
    rec = run_trial(args.n, config, args.pattern, args.seed, tuple(args.measure or MEASUREMENTS))
    doc = {
        "n": args.n,
        "gamma": args.gamma,
        "beta": args.beta,
        "phi": args.phi,
        "pattern": args.pattern,
        "seed": args.seed,
        "measurements": rec["values"],
        "predicted": {
            m: predict_measurement(m, args.gamma, args.beta, args.pattern, args.phi).to_dict()
            for m in rec["values"] if m in MEASUREMENTS
        },
    }
    if args.timings:
        doc["seconds"] = rec["seconds"]
    _emit(doc, args.out)
    if args.dump_graph:
        dep, graph = build_graph(args.n, config, args.seed)
        graph.to_json(args.dump_graph, dep, config)
    return 0


def cmd_predict(args, parser) -> int:
    _require_phi(parser, args)
    order = predict_measurement(args.measurement, args.gamma, args.beta, args.pattern, args.phi)
    doc = order.to_dict()
    doc["text"] = str(order)
    _emit(doc, args.out)
    return 0


def load_plan(path) -> SweepPlan:
    path = Path(path)
    if not path.exists():
        raise CliError(f"plan file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CliError(f"{path}: invalid JSON: {exc}") from None
    try:
        jsonschema.validate(doc, PLAN_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise CliError(f"{path}: schema error at {exc.json_path}: {exc.message}") from None
    try:
        return SweepPlan(**doc)
    except ValueError as exc:
        raise CliError(f"{path}: {exc}") from None


def cmd_sweep(args, parser) -> int:
    plan = load_plan(args.plan)
    threads = resolve_threads(args.threads)
    report, _ = run_sweep(plan, threads=threads, out_dir=args.out)
    print(json.dumps({
        "exponent": report.exponent,
        "ci": [report.ci_low, report.ci_high],
        "predicted_poly": report.predicted_poly,
        "verdict": report.verdict,
        "within_tolerance": report.within_tolerance,
        "out": str(args.out),
    }, indent=2))
    return 0


def cmd_validate_dataset(args, parser) -> int:
    for p in (args.edges, args.checkins):
        if not Path(p).exists():
            raise CliError(f"input file not found: {p}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)

    edges = parse_edges(args.edges)
    checkins = parse_checkins(args.checkins)
    users = locate_users(checkins, edges, tuple(args.bbox))
    summary = {
        "edges": len(edges),
        "checkins": len(checkins),
        "checkins_skipped": checkins.skipped,
        "users_located": len(users),
        "bbox": list(args.bbox),
    }
    deg_fit = fit_degree_exponent(users, args.min_degree_count)
    (out / "degree_fit.json").write_text(json.dumps(deg_fit.to_dict(), indent=2) + "\n")
    k, cnt = degree_histogram([u.out_degree for u in users])
    with open(out / "degree_points.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["degree", "users", "lg_degree", "lg_users"])
        for a, b in zip(k, cnt):
            w.writerow([int(a), int(b), float(np.log10(a)), float(np.log10(b))])

    full = args.full
    pts = population_distance_experiment(
        users,
        edges,
        sample_count=args.sample_count,
        d_f_km=args.d_f_km,
        subsample_users=None if full else args.subsample_users,
        max_positions=None if full else (args.max_positions or None),
        bbox=tuple(args.bbox),
        rng=rng,
    )
    with open(out / "formation_bins.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_lo", "n_hi", "x_lg_n", "y_lg_ratio", "numerator", "denominator"])
        for row in pts.rows():
            w.writerow([int(row[0]), int(row[1]), float(row[2]), float(row[3]), int(row[4]), int(row[5])])
    form_fit = fit_formation_exponent(pts, args.min_denominator)
    (out / "formation_fit.json").write_text(json.dumps(form_fit.to_dict(), indent=2) + "\n")
    summary.update({
        "positions_sampled": pts.positions_sampled,
        "positions_retained": pts.positions_retained,
        "users_in_experiment": pts.users_used,
        "gamma_hat": deg_fit.exponent,
        "beta_hat": form_fit.exponent,
    })
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(json.dumps(summary, indent=2))
    return 0


# --- parser ---------------------------------------------------------------------


def _model_flags(p, need_n: bool = True):
    if need_n:
        p.add_argument("--n", type=int, required=True, help="number of users (count, >= 2)")
    p.add_argument("--gamma", type=_nonneg_float("--gamma"), required=True,
                   help="friend-count exponent (dimensionless, >= 0)")
    p.add_argument("--beta", type=_nonneg_float("--beta"), required=True,
                   help="friendship-formation exponent (dimensionless, >= 0)")
    p.add_argument("--phi", type=_nonneg_float("--phi"), default=None,
                   help="destination-count exponent (dimensionless, >= 0); required for multicast")
    p.add_argument("--pattern", choices=PATTERNS, default="broadcast",
                   help="session pattern (default: broadcast)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="osnsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one trial and write its measurements as JSON")
    _model_flags(p)
    p.add_argument("--seed", type=int, default=0, help="root RNG seed (integer)")
    p.add_argument("--measure", action="append", choices=MEASUREMENTS,
                   help="measurement to compute (repeatable; default: all). "
                        "Loads are in distance units of the unit-density torus per unit rate")
    p.add_argument("--out", default=None, help="output JSON file (path; default: stdout)")
    p.add_argument("--dump-graph", default=None, metavar="PATH",
                   help="also write the social graph as JSON (path; positions, friends, anchors)")
    p.add_argument("--timings", action="store_true",
                   help="include per-stage wall time (seconds; makes output run-dependent)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("predict", help="print the predicted order Theta(n^poly (log n)^logpow) as JSON")
    _model_flags(p, need_n=False)
    p.add_argument("--measurement", choices=MEASUREMENTS, default="total-load",
                   help="quantity to predict (default: total-load)")
    p.add_argument("--out", default=None, help="output JSON file (path; default: stdout)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sweep", help="run a JSON sweep plan over a ladder of n and fit the exponent")
    p.add_argument("plan", help="sweep plan JSON file (path; see docs/schemas.md)")
    p.add_argument("--out", required=True, help="output directory (path) for trials.csv, ladder.csv and report.json")
    p.add_argument("--threads", type=_positive_int("--threads"), default=None,
                   help="worker processes (count; default: OSN_THREADS or all CPUs)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate-dataset", help="fit friend-count and formation exponents on check-in data")
    p.add_argument("--edges", required=True, help="friendship edge file (path; user<TAB>friend lines, .gz allowed)")
    p.add_argument("--checkins", required=True,
                   help="check-in file (path; user, timestamp, lat deg, lon deg, location id; .gz allowed)")
    p.add_argument("--out", required=True, help="output directory (path) for fit JSONs and CSVs")
    p.add_argument("--bbox", type=float, nargs=4, default=list(NORTH_AMERICA),
                   metavar=("LAT_MIN", "LAT_MAX", "LON_MIN", "LON_MAX"),
                   help="user bounding box in degrees (default: %(default)s)")
    p.add_argument("--sample-count", type=_positive_int("--sample-count"), default=120_000,
                   help="random positions drawn in the bounding box (count)")
    p.add_argument("--d-f-km", type=float, default=200.0,
                   help="drop positions farther than this from every user (km)")
    p.add_argument("--subsample-users", type=_positive_int("--subsample-users"), default=3000,
                   help="users scanned in the formation experiment (count, >= 1)")
    p.add_argument("--max-positions", type=int, default=20_000,
                   help="retained positions kept after filtering (count; 0 keeps all)")
    p.add_argument("--full", action="store_true",
                   help="use every located user and every retained position (switch; slow)")
    p.add_argument("--min-degree-count", type=_positive_int("--min-degree-count"), default=MIN_DEGREE_COUNT,
                   help="smallest user count N(K) for a degree to enter the fit (count)")
    p.add_argument("--min-denominator", type=_positive_int("--min-denominator"), default=MIN_BIN_DENOMINATOR,
                   help="smallest (user, position) pair count for a bin to enter the fit (count)")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for position sampling (integer)")
    p.set_defaults(func=cmd_validate_dataset)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except (CliError, FileNotFoundError, ValueError) as exc:
        print(f"osnsim {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
