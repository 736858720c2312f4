"""Exit criteria, each at its stated tolerance with the default port timers."""
import math

import numpy as np
import pytest

from eeenet import analytic
from eeenet.analytic import ModelInput
from eeenet.cli import main
from eeenet.core import PS_PER_S, RngStream
from eeenet.runner import run_scenario, validate
from eeenet.scenario import load_scenario, preset_names
from eeenet.traffic import (
    DEFAULT_FRAME_MIX,
    Deterministic,
    Pareto,
    Poisson,
    TrafficSpec,
    draw_frame_sizes,
    draw_interarrivals,
    generate_superposition,
)

pytestmark = [pytest.mark.acceptance, pytest.mark.slow]

T_W = 4.48e-6


def _failures(report):
    return [line for line in report.lines() if line.startswith("[FAIL]")]


def _summary(report):
    bad = _failures(report)
    return f"{len(report.checks) - len(bad)}/{len(report.checks)} checks" + (f"; first: {bad[0]}" if bad else "")


@pytest.fixture(scope="module")
def fig3():
    sc = load_scenario("fig3")
    return sc, run_scenario(sc)


def test_criterion_1_aggregation_matches_model(fig3, criterion):
    sc, result = fig3
    report = validate(result)
    checks = [c for c in report.checks if c.name == "w_eee"]
    assert len(checks) == 9
    errors = ", ".join(f"{c.error:.3f}" for c in checks)
    ok = criterion(1, "aggregation, Regular first stage, within 5% of w_eee",
                   all(c.passed for c in checks), f"rel errors {errors}")
    assert ok, "\n".join(c.line() for c in checks)


def test_criterion_2_aggregation_eee_first_stage(criterion):
    lines, ok = [], True
    for name, tol in (("fig4", 0.05), ("fig4_n2", 0.15)):
        sc = load_scenario(name)
        assert sc.tolerance == tol
        checks = [c for c in validate(run_scenario(sc)).checks if c.name == "w_eee"]
        ok &= all(c.passed for c in checks)
        lines += [f"{name} {c.line()}" for c in checks]
    worst = max(float(l.split("rel_err=")[1]) for l in lines if "fig4 " in l)
    worst2 = max(float(l.split("rel_err=")[1]) for l in lines if "fig4_n2 " in l)
    criterion(2, "aggregation, EEE first stage (N=100 at 5%, N=2 at 15%)", ok,
              f"worst rel error N=100 {worst:.3f}, N=2 {worst2:.3f}")
    assert ok, "\n".join(lines)


def test_criterion_3_delta_w_bound(fig3, criterion):
    sc, result = fig3
    checks = [c for c in validate(result).checks if c.name == "delta_w_agg_bound"]
    assert len(checks) == 9
    lo = min(c.sim for c in checks) * 1e6
    hi = max(c.sim for c in checks) * 1e6
    ok = criterion(3, "EEE minus Regular mean in [T_W/2, T_W] +/- one CI half-width",
                   all(c.passed for c in checks), f"deltas {lo:.3f}..{hi:.3f} us")
    assert ok, "\n".join(c.line() for c in checks)


def test_criterion_4_regular_to_eee_tandem(criterion):
    sc = load_scenario("fig5").with_overrides(warmup=0.0)
    report = validate(run_scenario(sc))
    names = {c.name for c in report.checks}
    maxima = [c.sim for c in report.checks if c.name == "max_waiting_bound"]
    ok = criterion(4, "Regular->EEE tandem: hop-1 mean within 5%, max <= 5.68 us and non-increasing",
                   report.passed and max(maxima) <= T_W + 1.2e-6, _summary(report))
    assert names == {"w_tandem_regular", "max_waiting_bound", "max_waiting_non_increasing"}
    assert ok, "\n".join(report.lines())


def test_criterion_5_green_tandem_per_frame(criterion):
    ok = True
    details = []
    for name in ("green_tandem", "green_tandem_constant"):
        sc = load_scenario(name).with_overrides(warmup=0.0)
        result = run_scenario(sc)
        report = validate(result)
        ok &= report.passed
        lo = min(p.sim.min for p in result.points) * 1e6
        hi = max(p.sim.max for p in result.points) * 1e6
        details.append(f"{name} {lo:.3f}..{hi:.3f} us")
        if name == "green_tandem_constant":
            assert any(c.name == "zero_jitter" for c in report.checks)
            ok &= all(p.sim.runs[0].min_ps == p.sim.runs[0].max_ps == sc.t_wake for p in result.points)
    criterion(5, "EEE->EEE tandem: hop-1 waits in [3.36, 5.68] us, exactly 4.48 us for constant sizes",
              ok, "; ".join(details))
    assert ok


def test_criterion_6_chain_convergence(criterion):
    sc = load_scenario("fig6")
    assert sc.chain_points == [1, 10, 50, 100]
    report = validate(run_scenario(sc))
    per = [c for c in report.checks if c.name == "per_iface_added"]
    shown = ", ".join(f"{c.sim * 1e6:.3f}" for c in per)
    ok = criterion(6, "Regular + n EEE hops: within tandem bounds, per-interface added delay at n=100 in [4.48, 5.08] us",
                   report.passed, f"{_summary(report)}; per-iface at n=100: {shown} us")
    assert ok, "\n".join(report.lines())


def test_criterion_7_analytic_identities(criterion):
    rng = np.random.default_rng(7)
    problems = []
    for _ in range(1000):
        mean = 10 ** rng.uniform(-8, -5)
        rho = rng.uniform(0.01, 0.99)
        x = ModelInput(rho / mean, mean, rng.uniform(0, 4) * mean * mean, rng.uniform(0.1, 20) * mean)
        diff = analytic.w_eee(x) - analytic.w_mg1(x)
        if not math.isclose(diff, analytic.delta_w_agg(x.lam, x.t_w), rel_tol=1e-12):
            problems.append(f"identity at {x}")
        if not math.isclose(analytic.delta_w_tandem(1, x.lam, x.t_w), analytic.delta_w_agg(x.lam, x.t_w), rel_tol=1e-12):
            problems.append(f"tandem(1) at {x}")
        y = ModelInput(x.lam, x.mean_service, x.var_service, 0.0)
        if not math.isclose(analytic.w_eee(y), analytic.w_mg1(y), rel_tol=1e-12):
            problems.append(f"t_w=0 at {x}")
    lams = np.sort(10 ** rng.uniform(0, 9, 1000))
    deltas = [analytic.delta_w_agg(l, T_W) for l in lams]
    if not all(T_W / 2 <= d <= T_W for d in deltas):
        problems.append("delta_w_agg outside [T_W/2, T_W]")
    if any(b > a for a, b in zip(deltas, deltas[1:])):
        problems.append("delta_w_agg not monotone")
    n = 10**6
    if not math.isclose(analytic.delta_w_tandem(n, 8.4e5, T_W) / n, T_W, rel_tol=1e-5):
        problems.append("large-n limit")
    ok = criterion(7, "analytic identities", not problems, problems[0] if problems else "1000 random inputs")
    assert ok, problems[:5]


def test_criterion_8_generator_oracles(criterion):
    n = 10**6
    lam = 8.4e5
    out = {}
    rng = RngStream(8, 0)
    x = draw_interarrivals(Poisson(lam), rng.generator(0), n) / PS_PER_S
    out["poisson rate"] = (abs(1 / x.mean() / lam - 1), 0.01)
    x = draw_interarrivals(Pareto(2.5, lam), rng.generator(1), n) / PS_PER_S
    out["pareto rate"] = (abs(1 / x.mean() / lam - 1), 0.02)
    x = draw_interarrivals(Deterministic(lam), rng.generator(2), 1000) / PS_PER_S
    out["deterministic rate"] = (abs(1 / x.mean() / lam - 1), 0.01)
    sizes = draw_frame_sizes(DEFAULT_FRAME_MIX, rng.generator(3), n)
    out["bimodal p(100 B)"] = (abs((sizes == 800).mean() - 0.54), 0.01)
    specs = [TrafficSpec(Poisson(lam / 100), DEFAULT_FRAME_MIX)] * 100
    merged = np.sort(np.concatenate([t for t, _ in generate_superposition(specs, 8, n)]))
    out["superposed rate"] = (abs((len(merged) - 1) / (merged[-1] - merged[0]) * PS_PER_S / lam - 1), 0.01)
    bad = [k for k, (err, tol) in out.items() if err > tol]
    ok = criterion(8, "generator oracles", not bad, ", ".join(f"{k} {e:.4f}<={t}" for k, (e, t) in out.items()))
    assert ok, bad


def test_criterion_9_presets_are_deterministic(tmp_path, criterion):
    differing = []
    for name in preset_names():
        outs = []
        for k in range(2):
            path = tmp_path / f"{name}_{k}.csv"
            code = main(["run", name, "--frames", "20000", "--replications", "2", "-o", str(path)])
            assert code == 0
            outs.append(path.read_bytes())
        if outs[0] != outs[1]:
            differing.append(name)
    ok = criterion(9, "byte-identical CSV for every preset", not differing,
                   f"{len(preset_names())} presets" + (f"; differing: {differing}" if differing else ""))
    assert ok
