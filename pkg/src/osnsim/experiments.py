"""Size-ladder sweeps and log-log exponent fits.

A trial runs deployment, graph, and sessions for one ``(n, seed)`` and
records the requested measurements.  Every stochastic stage draws from its
own child stream of the trial seed, so skipping a stage (say, no EMSTs for a
degree-sum sweep) never shifts the numbers produced by the others.
"""

from __future__ import annotations

import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .complexity import anchor_offset_sum, session_emst_lengths
from .model import ModelConfig, SocialGraph, anchors_for_owners, sample_degrees, sample_deployment
from .sessions import gen_broadcast_sessions, sample_destination_counts, sample_multicast_sessions
from .tables import AsymptoticOrder, predict_measurement

MEASUREMENTS = ("total-load", "anchor-emst-sum", "degree-sum", "destination-sum", "mean-anchor-distance")
PATTERNS = ("broadcast", "multicast")
STAGES = ("deployment", "degrees", "anchors", "counts")


def _stage_rngs(seed: int) -> dict[str, np.random.Generator]:
    children = np.random.SeedSequence(seed).spawn(len(STAGES))
    return {name: np.random.default_rng(s) for name, s in zip(STAGES, children)}


def trial_seed(base_seed: int, n: int, replicate: int) -> int:
    """64-bit seed for one ladder cell, derived from the plan's base seed."""
    return int(np.random.SeedSequence([base_seed, n, replicate]).generate_state(1, np.uint64)[0])


def run_trial(
    n: int,
    config: ModelConfig,
    pattern: str = "broadcast",
    seed: int | None = None,
    measurements=MEASUREMENTS,
) -> dict:
    """One end-to-end run; returns measurement values plus per-stage seconds.

    When EMSTs are computed the anchor-to-node offset sum rides along as a
    diagnostic under ``values["anchor-offset-sum"]``.
    """
    if pattern not in PATTERNS:
        raise ValueError(f"pattern must be one of {PATTERNS}, got {pattern!r}")
    unknown = set(measurements) - set(MEASUREMENTS)
    if unknown:
        raise ValueError(f"unknown measurements: {sorted(unknown)}")
    seed = config.seed if seed is None else seed
    want = set(measurements)
    rngs = _stage_rngs(seed)
    timings: dict[str, float] = {}
    values: dict[str, float] = {}

    t = time.perf_counter()
    degrees = sample_degrees(n, config.gamma, n, rngs["degrees"])
    timings["degrees"] = time.perf_counter() - t
    if "degree-sum" in want:
        values["degree-sum"] = float(degrees.sum())

    needs_geometry = want & {"total-load", "anchor-emst-sum", "mean-anchor-distance"}
    counts = degrees
    if pattern == "multicast" and (needs_geometry or "destination-sum" in want):
        t = time.perf_counter()
        counts = sample_destination_counts(degrees, config.phi, rngs["counts"])
        timings["counts"] = time.perf_counter() - t
    if "destination-sum" in want:
        values["destination-sum"] = float(counts.sum())

    if needs_geometry:
        t = time.perf_counter()
        dep = sample_deployment(n, rngs["deployment"])
        timings["deployment"] = time.perf_counter() - t

        t = time.perf_counter()
        if pattern == "broadcast":
            owners = np.repeat(np.arange(n), degrees)
            points, radii, nodes = anchors_for_owners(dep, owners, config.beta, rngs["anchors"])
            graph = SocialGraph.from_anchors(degrees, points, nodes, radii)
            sessions = gen_broadcast_sessions(graph)
        else:
            sessions = sample_multicast_sessions(dep, counts, config.beta, rngs["anchors"])
            graph = sessions.graph
        timings["graph"] = time.perf_counter() - t

        if "mean-anchor-distance" in want:
            values["mean-anchor-distance"] = float(np.mean(graph.anchor_radii))
        if want & {"total-load", "anchor-emst-sum"}:
            t = time.perf_counter()
            if "total-load" in want:
                values["total-load"] = math.fsum(session_emst_lengths(sessions, dep, "node"))
            if "anchor-emst-sum" in want:
                values["anchor-emst-sum"] = math.fsum(session_emst_lengths(sessions, dep, "anchor"))
            values["anchor-offset-sum"] = anchor_offset_sum(sessions, dep)
            timings["emst"] = time.perf_counter() - t

    return {
        "n": n,
        "seed": int(seed),
        "pattern": pattern,
        "values": values,
        "seconds": timings,
    }


def build_graph(n: int, config: ModelConfig, seed: int | None = None):
    """Deployment and full social graph drawn from the same streams as :func:`run_trial`.

    For broadcast this is exactly the graph the trial measures; multicast
    trials only sample the chosen anchors, so their graph is a thinned one.
    """
    seed = config.seed if seed is None else seed
    rngs = _stage_rngs(seed)
    degrees = sample_degrees(n, config.gamma, n, rngs["degrees"])
    dep = sample_deployment(n, rngs["deployment"])
    owners = np.repeat(np.arange(n), degrees)
    points, radii, nodes = anchors_for_owners(dep, owners, config.beta, rngs["anchors"])
    return dep, SocialGraph.from_anchors(degrees, points, nodes, radii)


# --- fitting --------------------------------------------------------------------


@dataclass
class ScalingFitReport:
    ns: list[int]
    means: list[float]
    stderrs: list[float]
    replicates: list[int]
    exponent: float
    ci_low: float
    ci_high: float
    intercept: float
    log_exponent: float | None = None
    log_ci: tuple[float, float] | None = None
    predicted_poly: float | None = None
    predicted_logpow: float | None = None
    predicted_source: str = ""
    tolerance: float = 0.15
    measurement: str = ""
    verdict: bool | None = None
    within_tolerance: bool | None = None
    plan: dict | None = field(default=None, repr=False)

    @property
    def error(self) -> float | None:
        if self.predicted_poly is None:
            return None
        return abs(self.exponent - self.predicted_poly)

    def judge(self, predicted: AsymptoticOrder | None, tolerance: float | None = None) -> "ScalingFitReport":
        """Fill in the verdict fields for a predicted order."""
        if tolerance is not None:
            self.tolerance = float(tolerance)
        if predicted is None:
            return self
        self.predicted_poly = float(predicted.poly)
        self.predicted_logpow = float(predicted.logpow)
        self.predicted_source = predicted.source
        self.verdict, self.within_tolerance = compute_verdict(
            self.exponent, self.ci_low, self.ci_high, self.predicted_poly, self.tolerance
        )
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["error"] = self.error
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingFitReport":
        d = dict(d)
        d.pop("error", None)
        if d.get("log_ci") is not None:
            d["log_ci"] = tuple(d["log_ci"])
        return cls(**d)


def compute_verdict(exponent, ci_low, ci_high, predicted, tolerance) -> tuple[bool, bool]:
    """(predicted inside the widened CI, point estimate within tolerance)."""
    inside = (ci_low - tolerance) <= predicted <= (ci_high + tolerance)
    close = abs(exponent - predicted) <= tolerance
    return bool(inside), bool(close)


def fit_scaling_exponent(points, fit_log_term: bool = False, confidence: float = 0.95) -> ScalingFitReport:
    """Least squares of ``log y`` on ``log n`` (plus ``log log n`` if asked).

    ``points`` is an iterable of ``(n, y)``; repeated ``n`` are replicates and
    are averaged before fitting.
    """
    pts = [(float(n), float(y)) for n, y in points]
    if any(not y > 0 for _, y in pts):
        raise ValueError("all y must be positive for a log-log fit")
    if any(not n > 1 for n, _ in pts):
        raise ValueError("all n must exceed 1")
    groups: dict[float, list[float]] = {}
    for n, y in pts:
        groups.setdefault(n, []).append(y)
    ns = sorted(groups)
    k = 3 if fit_log_term else 2
    if len(ns) < max(4, k + 1):
        raise ValueError(f"need at least {max(4, k + 1)} distinct n, got {len(ns)}")
    means = np.array([np.mean(groups[n]) for n in ns])
    reps = [len(groups[n]) for n in ns]
    sems = [float(np.std(groups[n], ddof=1) / math.sqrt(len(groups[n]))) if len(groups[n]) > 1 else 0.0 for n in ns]

    x = np.log(np.array(ns))
    cols = [x, np.ones_like(x)]
    if fit_log_term:
        cols.insert(1, np.log(x))
    X = np.column_stack(cols)
    yv = np.log(means)
    coef, *_ = np.linalg.lstsq(X, yv, rcond=None)
    resid = yv - X @ coef
    dof = len(ns) - k
    s2 = float(resid @ resid) / dof
    cov = s2 * np.linalg.inv(X.T @ X)
    tq = stats.t.ppf(0.5 + confidence / 2, dof)
    half = tq * math.sqrt(max(cov[0, 0], 0.0))
    report = ScalingFitReport(
        ns=[int(n) for n in ns],
        means=means.tolist(),
        stderrs=sems,
        replicates=reps,
        exponent=float(coef[0]),
        ci_low=float(coef[0] - half),
        ci_high=float(coef[0] + half),
        intercept=float(coef[-1]),
    )
    if fit_log_term:
        lh = tq * math.sqrt(max(cov[1, 1], 0.0))
        report.log_exponent = float(coef[1])
        report.log_ci = (float(coef[1] - lh), float(coef[1] + lh))
    return report


# --- sweeps ---------------------------------------------------------------------


@dataclass(frozen=True)
class SweepPlan:
    n_ladder: tuple[int, ...]
    replicates: int
    gamma: float
    beta: float
    phi: float | None = None
    pattern: str = "broadcast"
    measurement: str = "total-load"
    seed: int = 0
    tolerance: float = 0.15
    fit_log_term: bool = False

    def __post_init__(self):
        ladder = tuple(int(n) for n in self.n_ladder)
        object.__setattr__(self, "n_ladder", ladder)
        if len(ladder) < 4:
            raise ValueError("n_ladder needs at least 4 points")
        if any(b <= a for a, b in zip(ladder, ladder[1:])):
            raise ValueError("n_ladder must be strictly increasing")
        if ladder[0] < 2:
            raise ValueError("every n must be >= 2")
        if self.replicates < 3:
            raise ValueError("replicates must be >= 3")
        if self.pattern not in PATTERNS:
            raise ValueError(f"pattern must be one of {PATTERNS}")
        if self.measurement not in MEASUREMENTS:
            raise ValueError(f"measurement must be one of {MEASUREMENTS}")
        if self.pattern == "multicast" and self.phi is None:
            raise ValueError("multicast plans need phi")
        ModelConfig(ladder[0], self.gamma, self.beta, self.phi or 0.0)

    def config(self, n: int) -> ModelConfig:
        return ModelConfig(n, self.gamma, self.beta, self.phi or 0.0, self.seed)

    def predicted(self) -> AsymptoticOrder:
        return predict_measurement(self.measurement, self.gamma, self.beta, self.pattern, self.phi)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_ladder"] = list(self.n_ladder)
        return d


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, else ``OSN_THREADS``, else the usable CPU count."""
    if threads is None:
        env = os.environ.get("OSN_THREADS")
        if env:
            threads = int(env)
        else:
            threads = len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def _run_cell(args):
    plan, n, rep = args
    seed = trial_seed(plan.seed, n, rep)
    try:
        rec = run_trial(n, plan.config(n), plan.pattern, seed, (plan.measurement,))
    except Exception as exc:
        raise RuntimeError(f"trial failed at n={n}, seed={seed}: {exc}") from exc
    rec["replicate"] = rep
    return rec


def run_sweep(plan: SweepPlan, threads: int | None = None, out_dir=None) -> tuple[ScalingFitReport, list[dict]]:
    """Run every ladder cell, fit the exponent, and judge it against the tables."""
    tasks = [(plan, n, r) for n in plan.n_ladder for r in range(plan.replicates)]
    workers = min(resolve_threads(threads), len(tasks))
    if workers == 1:
        records = [_run_cell(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_run_cell, tasks))
    records.sort(key=lambda r: (r["n"], r["replicate"]))
    pts = [(r["n"], r["values"][plan.measurement]) for r in records]
    report = fit_scaling_exponent(pts, plan.fit_log_term)
    report.measurement = plan.measurement
    report.plan = plan.to_dict()
    report.judge(plan.predicted(), plan.tolerance)
    if out_dir is not None:
        write_sweep_outputs(Path(out_dir), plan, report, records)
    return report, records


def write_sweep_outputs(out: Path, plan: SweepPlan, report: ScalingFitReport, records: list[dict]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "trials.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "replicate", "seed", "measurement", "value", "seconds"])
        for r in records:
            w.writerow([r["n"], r["replicate"], r["seed"], plan.measurement,
                        repr(r["values"][plan.measurement]), f"{sum(r['seconds'].values()):.6f}"])
    with open(out / "ladder.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n", "mean", "stderr", "replicates", "log_n", "log_mean", "fitted_log_mean"])
        for n, m, s, k in zip(report.ns, report.means, report.stderrs, report.replicates):
            fitted = report.intercept + report.exponent * math.log(n)
            if report.log_exponent is not None:
                fitted += report.log_exponent * math.log(math.log(n))
            w.writerow([n, repr(m), repr(s), k, math.log(n), math.log(m), fitted])
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
