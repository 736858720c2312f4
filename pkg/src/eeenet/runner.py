"""Replicated scenario runs, model comparison and CSV output."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import analytic
from .analytic import ModelInput, TandemParams
from .core import PS_PER_S
from .port import EeeConfig, Mode, PortState, serve_fifo
from .scenario import Scenario
from .stats import ReplicationSet, SummaryStats, confidence_interval, state_occupancy, summarize
from .topology import build_aggregation, build_tandem, simulate, simulate_chain_summary


@dataclass
class Replication:
    """What one engine run reports back; small and picklable."""

    measured: SummaryStats
    regular: SummaryStats | None = None
    occupancy: dict | None = None
    hop_means: list[float] | None = None  # chain runs, EEE chain
    regular_hop_means: list[float] | None = None  # chain runs, all-regular chain


@dataclass
class ChainPoint:
    n: int
    per_iface_added: list[float]  # per replication, seconds
    total_eee: list[float]
    first_eee: list[float]

    @property
    def ci(self) -> tuple[float, float]:
        if len(self.per_iface_added) < 2:
            return float(np.mean(self.per_iface_added)), float("nan")
        return confidence_interval(self.per_iface_added)


@dataclass
class PointResult:
    load: float
    lam: float
    sim: ReplicationSet
    regular: ReplicationSet | None = None
    occupancy: dict | None = None
    chain: list[ChainPoint] = field(default_factory=list)

    @property
    def delta_runs(self) -> list[float]:
        return [e.mean - r.mean for e, r in zip(self.sim.runs, self.regular.runs)]


@dataclass
class ScenarioResult:
    scenario: Scenario
    points: list[PointResult]


def _network(sc: Scenario, lam: float):
    traffic = sc.traffic_for(lam)
    if sc.kind == "aggregation":
        return build_aggregation(sc.n_sources, sc.first_stage, sc.eee_config(), traffic)
    return build_tandem([sc.eee_config(m) for m in sc.chain], traffic)


def run_replication(sc: Scenario, lam: float, rep: int) -> Replication:
    seed = sc.seed + rep
    net = _network(sc, lam)
    if sc.is_chain_run:
        eee = simulate_chain_summary(net, seed, sc.frames, sc.warmup)
        reg_net = build_tandem([EeeConfig.regular(sc.rate_bps)] * len(sc.chain), net.traffic[0])
        reg = simulate_chain_summary(reg_net, seed, sc.frames, sc.warmup)
        measured = SummaryStats(eee[1].count, eee[1].mean, 0.0, eee[1].min / PS_PER_S,
                                eee[1].max / PS_PER_S, eee[1].min, eee[1].max)
        return Replication(measured, hop_means=[h.mean for h in eee], regular_hop_means=[h.mean for h in reg])
    res = simulate(net, seed, sc.frames, sc.backend)
    log = res.measured
    measured = summarize(log.waiting(), sc.warmup)
    occ = state_occupancy(log, res.end_time)
    regular = None
    if sc.kind == "aggregation":
        svc = log.departure - log.start
        start, _ = serve_fifo(log.arrival, svc, EeeConfig.regular(sc.rate_bps))
        regular = summarize(start - log.arrival, sc.warmup)
    return Replication(measured, regular, {s.value: f for s, f in occ.items()})


def _job(args):
    sc, lam, rep = args
    return run_replication(sc, lam, rep)


def run_scenario(sc: Scenario, jobs: int = 1) -> ScenarioResult:
    """Run every sweep point ``sc.replications`` times (seeds ``seed + k``).

    Aggregation never depends on completion order: results are gathered in
    (point, replication) order.
    """
    sweep = sc.sweep()
    tasks = [(sc, lam, rep) for _, lam in sweep for rep in range(sc.replications)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            reps = list(pool.map(_job, tasks))
    else:
        reps = [_job(t) for t in tasks]
    points = []
    k = sc.replications
    for i, (load, lam) in enumerate(sweep):
        chunk = reps[i * k:(i + 1) * k]
        point = PointResult(load, lam, ReplicationSet([r.measured for r in chunk]))
        if chunk[0].regular is not None:
            point.regular = ReplicationSet([r.regular for r in chunk])
        if chunk[0].occupancy is not None:
            point.occupancy = {s: float(np.mean([r.occupancy[s] for r in chunk])) for s in chunk[0].occupancy}
        if sc.is_chain_run:
            for n in sc.chain_points:
                added, total, first = [], [], []
                for r in chunk:
                    e = sum(r.hop_means[: n + 1])
                    g = sum(r.regular_hop_means[: n + 1])
                    added.append((e - g) / n)
                    total.append(sum(r.hop_means[1: n + 1]))
                    first.append(r.hop_means[1])
                point.chain.append(ChainPoint(n, added, total, first))
        points.append(point)
    return ScenarioResult(sc, points)


# ---------------------------------------------------------------- models


def model_input(sc: Scenario, lam: float) -> ModelInput:
    return ModelInput.for_frames(lam, sc.sizes, sc.rate_bps, sc.t_wake / PS_PER_S)


def service_extremes(sc: Scenario) -> tuple[float, float]:
    return sc.sizes.min_bits / sc.rate_bps, sc.sizes.max_bits / sc.rate_bps


def frame_bounds(sc: Scenario) -> tuple[float, float]:
    """Per-frame waiting bounds at the second hop of a tandem.

    Formed in integer picoseconds so a sample sitting exactly on a bound
    compares equal to it.
    """
    s_min = sc.sizes.min_bits * PS_PER_S // sc.rate_bps
    s_max = sc.sizes.max_bits * PS_PER_S // sc.rate_bps
    hi = sc.t_wake + s_max
    lo = sc.t_wake - (s_max - s_min) if sc.chain[0] is Mode.EEE else 0
    return lo / PS_PER_S, hi / PS_PER_S


def chain_bounds(sc: Scenario, w_first: float, n: int) -> tuple[float, float]:
    _, s_max = service_extremes(sc)
    return analytic.tandem_bounds(w_first, TandemParams(n, s_max), sc.t_wake / PS_PER_S)


# ------------------------------------------------------------ validation


@dataclass
class Check:
    name: str
    point: str
    passed: bool
    sim: float
    expected: float | None = None
    lo: float | None = None
    hi: float | None = None
    error: float | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        if self.expected is not None:
            detail = f"sim={self.sim * 1e6:.6f}us model={self.expected * 1e6:.6f}us rel_err={self.error:.4f}"
        elif self.lo is not None:
            detail = f"value={self.sim * 1e6:.6f}us bounds=[{self.lo * 1e6:.6f}, {self.hi * 1e6:.6f}]us"
        else:
            detail = f"value={self.sim!r}"
        return f"[{status}] {self.name} {self.point}: {detail}"


@dataclass
class ValidationReport:
    checks: list[Check]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def lines(self) -> list[str]:
        return [c.line() for c in self.checks]


def _rel(sim, model, name, point, tol):
    err = abs(sim - model) / model
    return Check(name, point, err <= tol, sim, expected=model, error=err)


def _within(value, lo, hi, name, point):
    return Check(name, point, lo <= value <= hi, value, lo=lo, hi=hi)


def validate(result: ScenarioResult, tolerance: float | None = None) -> ValidationReport:
    """Compare simulated means with the closed forms that apply to the scenario."""
    sc = result.scenario
    tol = sc.tolerance if tolerance is None else tolerance
    t_w = sc.t_wake / PS_PER_S
    s_min, s_max = service_extremes(sc)
    checks = []
    if sc.kind == "aggregation":
        for p in result.points:
            label = f"load={p.load:.4g}"
            checks.append(_rel(p.sim.mean, analytic.w_eee(model_input(sc, p.lam)), "w_eee", label, tol))
            deltas = p.delta_runs
            mean = float(np.mean(deltas))
            eps = confidence_interval(deltas)[1] if len(deltas) > 1 else 0.0
            checks.append(_within(mean, t_w / 2 - eps, t_w + eps, "delta_w_agg_bound", label))
        return ValidationReport(checks)

    if sc.is_chain_run:
        n_last = max(sc.chain_points)
        for p in result.points:
            for cp in p.chain:
                label = f"load={p.load:.4g} n={cp.n}"
                total = float(np.mean(cp.total_eee))
                lo, hi = chain_bounds(sc, float(np.mean(cp.first_eee)), cp.n)
                checks.append(_within(total, lo, hi, "tandem_bounds", label))
                if cp.n == n_last:
                    checks.append(_within(cp.ci[0], t_w, t_w + sc.sizes.mean_bits / sc.rate_bps,
                                          "per_iface_added", label))
        return ValidationReport(checks)

    if len(sc.chain) < 2:
        for p in result.points:
            label = f"load={p.load:.4g}"
            checks.append(_rel(p.sim.mean, analytic.w_eee(model_input(sc, p.lam)), "w_eee", label, tol))
        return ValidationReport(checks)

    lo, hi = frame_bounds(sc)
    if sc.chain[0] is Mode.REGULAR and sc.chain[1] is Mode.EEE:
        prev = math.inf
        for p in result.points:
            label = f"load={p.load:.4g}"
            checks.append(_rel(p.sim.mean, analytic.w_tandem_regular(p.lam, t_w), "w_tandem_regular", label, tol))
            checks.append(_within(p.sim.max, lo, hi, "max_waiting_bound", label))
            checks.append(Check("max_waiting_non_increasing", label, p.sim.max <= prev, p.sim.max))
            prev = p.sim.max
    elif sc.chain[0] is Mode.EEE and sc.chain[1] is Mode.EEE:
        for p in result.points:
            label = f"load={p.load:.4g}"
            if s_min == s_max:
                checks.append(Check("zero_jitter", label, p.sim.min == p.sim.max == t_w, p.sim.max, expected=None))
            checks.append(_within(p.sim.min, lo, hi, "frame_waiting_min", label))
            checks.append(_within(p.sim.max, lo, hi, "frame_waiting_max", label))
    return ValidationReport(checks)


# ---------------------------------------------------------------- output

AGG_COLUMNS = ["load", "lambda_fps", "sim_mean_us", "ci_half_us", "model_eee_us", "model_mg1_us",
               "delta_model_us", "sim_regular_us", "sim_delta_us", "lpi_fraction"]
TANDEM_COLUMNS = ["load", "lambda_fps", "sim_mean_us", "ci_half_us", "sim_min_us", "sim_max_us",
                  "bound_lo_us", "bound_hi_us", "model_tandem_regular_us", "lpi_fraction"]
CHAIN_COLUMNS = ["n", "per_iface_added_us", "bound_lo_us", "bound_hi_us", "load", "ci_half_us",
                 "total_eee_us", "eq9_lo_us", "eq9_hi_us", "model_delta_per_iface_us"]


def _us(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return f"{x * 1e6:.6f}"


def _num(x) -> str:
    return f"{x:.10g}"


def columns_for(sc: Scenario) -> list[str]:
    if sc.kind == "aggregation":
        return AGG_COLUMNS
    return CHAIN_COLUMNS if sc.is_chain_run else TANDEM_COLUMNS


def result_rows(result: ScenarioResult) -> list[list[str]]:
    sc = result.scenario
    t_w = sc.t_wake / PS_PER_S
    rows = []
    for p in result.points:
        lpi = "" if p.occupancy is None else f"{p.occupancy[PortState.LPI.value]:.6f}"
        if sc.kind == "aggregation":
            x = model_input(sc, p.lam)
            rows.append([_num(p.load), _num(p.lam), _us(p.sim.mean), _us(p.sim.ci_half_width),
                         _us(analytic.w_eee(x)), _us(analytic.w_mg1(x)), _us(analytic.delta_w_agg(p.lam, t_w)),
                         _us(p.regular.mean), _us(float(np.mean(p.delta_runs))), lpi])
        elif sc.is_chain_run:
            s_mean = sc.sizes.mean_bits / sc.rate_bps
            for cp in p.chain:
                center, half = cp.ci
                lo, hi = chain_bounds(sc, float(np.mean(cp.first_eee)), cp.n)
                rows.append([str(cp.n), _us(center), _us(t_w), _us(t_w + s_mean), _num(p.load), _us(half),
                             _us(float(np.mean(cp.total_eee))), _us(lo), _us(hi),
                             _us(analytic.delta_w_tandem(cp.n, p.lam, t_w) / cp.n)])
        else:
            lo, hi = frame_bounds(sc)
            model = analytic.w_tandem_regular(p.lam, t_w) if sc.chain[0] is Mode.REGULAR else None
            rows.append([_num(p.load), _num(p.lam), _us(p.sim.mean), _us(p.sim.ci_half_width),
                         _us(p.sim.min), _us(p.sim.max), _us(lo), _us(hi), _us(model), lpi])
    return rows


def model_curve(sc: Scenario, points: int = 200) -> tuple[list[str], list[list[str]]]:
    """Densely sampled model values over the sweep range."""
    sweep = sc.sweep()
    t_w = sc.t_wake / PS_PER_S
    if sc.is_chain_run:
        lams = [lam for _, lam in sweep]
        header = ["n", "load", "lambda_fps", "model_delta_per_iface_us", "limit_us"]
        rows = []
        for (load, lam) in sweep:
            for n in range(1, max(sc.chain_points) + 1):
                rows.append([str(n), _num(load), _num(lam), _us(analytic.delta_w_tandem(n, lam, t_w) / n),
                             _us(analytic.per_iface_added_delay_limit(t_w))])
        return header, rows
    loads = [l for l, _ in sweep]
    lo_load, hi_load = min(loads), max(loads)
    grid = [lo_load] if lo_load == hi_load else list(np.linspace(lo_load, hi_load, points))
    mean = sc.sizes.mean_bits
    rows = []
    if sc.kind == "aggregation":
        header = ["load", "lambda_fps", "model_eee_us", "model_mg1_us", "delta_model_us"]
        for load in grid:
            lam = load * sc.rate_bps / mean
            x = model_input(sc, lam)
            rows.append([_num(load), _num(lam), _us(analytic.w_eee(x)), _us(analytic.w_mg1(x)),
                         _us(analytic.delta_w_agg(lam, t_w))])
    else:
        header = ["load", "lambda_fps", "model_tandem_regular_us", "bound_lo_us", "bound_hi_us"]
        lo, hi = frame_bounds(sc)
        for load in grid:
            lam = load * sc.rate_bps / mean
            rows.append([_num(load), _num(lam), _us(analytic.w_tandem_regular(lam, t_w)), _us(lo), _us(hi)])
    return header, rows


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def results_csv(result: ScenarioResult) -> str:
    return _csv_text(columns_for(result.scenario), result_rows(result))


def emit_results(result: ScenarioResult, path: str, plot_data: bool = False) -> list[str]:
    """Write the results CSV (and, with ``plot_data``, a ``*_model.csv`` curve file)."""
    written = []
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(results_csv(result))
    written.append(path)
    if plot_data:
        stem = path[:-4] if path.endswith(".csv") else path
        curve = f"{stem}_model.csv"
        header, rows = model_curve(result.scenario)
        with open(curve, "w", encoding="utf-8", newline="") as fh:
            fh.write(_csv_text(header, rows))
        written.append(curve)
    return written
