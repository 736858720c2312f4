"""Command-line entry point: ``eeenet {run,validate,model,presets}``."""
from __future__ import annotations

import argparse
import sys

from . import analytic
from .analytic import DomainError, ModelInput, TandemParams
from .port import ConfigError
from .runner import emit_results, results_csv, run_scenario, validate
from .scenario import ScenarioError, load_scenario, preset_names, preset_text
from .traffic import Bimodal, Constant, TrafficError

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def _add_run_args(p):
    p.add_argument("scenario", help="scenario file or preset name")
    p.add_argument("-o", "--output", help="CSV output path (overrides output.csv)")
    p.add_argument("--plot-data", action="store_true", help="also write a densely sampled model curve")
    p.add_argument("--frames", type=int, help="override run.frames")
    p.add_argument("--replications", type=int, help="override run.replications")
    p.add_argument("--seed", type=int, help="override run.seed")
    p.add_argument("--backend", choices=["kernel", "events"], help="override run.backend")
    p.add_argument("-j", "--jobs", type=int, default=1, help="worker processes for replications")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eeenet", description="Simulate and model delay in EEE networks.")
    sub = parser.add_subparsers(dest="command", required=True)

    _add_run_args(sub.add_parser("run", help="run a scenario and emit CSV"))
    p = sub.add_parser("validate", help="run a scenario and compare it against the models")
    _add_run_args(p)
    p.add_argument("--tolerance", type=float, help="override validate.tolerance")

    p = sub.add_parser("model", help="evaluate the closed-form models")
    rate = p.add_mutually_exclusive_group(required=True)
    rate.add_argument("--load", type=float, help="offered load rho")
    rate.add_argument("--lambda", dest="lam", type=float, help="arrival rate in frames/s")
    p.add_argument("--rate-bps", type=float, default=10e9)
    p.add_argument("--t-wake-ns", type=float, default=4480.0)
    p.add_argument("--size-bytes", type=int, help="constant frame size (default: 100/1500 bimodal)")
    p.add_argument("--size-a-bytes", type=int, default=100)
    p.add_argument("--p-a", type=float, default=0.54)
    p.add_argument("--size-b-bytes", type=int, default=1500)
    p.add_argument("-n", type=int, default=1, help="EEE interfaces in series")
    p.add_argument("--w-first", type=float, help="mean waiting (s) at the first EEE interface; default w_eee")

    p = sub.add_parser("presets", help="list built-in scenarios")
    p.add_argument("--show", metavar="NAME", help="print one preset's scenario file")
    return parser


def _scenario(args):
    sc = load_scenario(args.scenario)
    sc = sc.with_overrides(frames=args.frames, replications=args.replications, seed=args.seed, backend=args.backend)
    if args.output:
        sc = sc.with_overrides(csv=args.output)
    if args.plot_data:
        sc = sc.with_overrides(plot_data=True)
    if sc.process == "trace":
        print("note: trace replay ignores configured loads/rates; arrivals come from "
              f"{sc.trace_path}", file=sys.stderr)
    return sc


def _emit(result, sc):
    if sc.csv:
        for path in emit_results(result, sc.csv, sc.plot_data):
            print(f"wrote {path}", file=sys.stderr)
    else:
        sys.stdout.write(results_csv(result))


def cmd_run(args) -> int:
    sc = _scenario(args)
    result = run_scenario(sc, jobs=args.jobs)
    _emit(result, sc)
    return EXIT_PASS


def cmd_validate(args) -> int:
    sc = _scenario(args)
    result = run_scenario(sc, jobs=args.jobs)
    if sc.csv:
        _emit(result, sc)
    report = validate(result, args.tolerance)
    for line in report.lines():
        print(line)
    print("validation passed" if report.passed else "validation FAILED")
    return EXIT_PASS if report.passed else EXIT_FAIL


def model_values(args) -> dict[str, float]:
    sizes = Constant(8 * args.size_bytes) if args.size_bytes else Bimodal(
        8 * args.size_a_bytes, args.p_a, 8 * args.size_b_bytes)
    t_w = args.t_wake_ns * 1e-9
    if args.load is not None:
        x = ModelInput.for_load(args.load, sizes, args.rate_bps, t_w)
    else:
        x = ModelInput.for_frames(args.lam, sizes, args.rate_bps, t_w)
    out = {
        "lambda_fps": x.lam,
        "rho": x.rho,
        "mean_service_s": x.mean_service,
        "var_service_s2": x.var_service,
        "w_mg1_s": analytic.w_mg1(x),
        "w_eee_s": analytic.w_eee(x),
        "delta_w_agg_s": analytic.delta_w_agg(x.lam, t_w),
        "w_tandem_regular_s": analytic.w_tandem_regular(x.lam, t_w),
        "delta_w_tandem_s": analytic.delta_w_tandem(args.n, x.lam, t_w),
        "per_iface_limit_s": analytic.per_iface_added_delay_limit(t_w),
    }
    w_first = out["w_eee_s"] if args.w_first is None else args.w_first
    lo, hi = analytic.tandem_bounds(w_first, TandemParams(args.n, sizes.max_bits / args.rate_bps), t_w)
    out["tandem_lo_s"] = lo
    out["tandem_hi_s"] = hi
    return out


def cmd_model(args) -> int:
    for key, value in model_values(args).items():
        print(f"{key} = {value!r}")
    return EXIT_PASS


def cmd_presets(args) -> int:
    if args.show:
        sys.stdout.write(preset_text(args.show))
        return EXIT_PASS
    for name in preset_names():
        first = preset_text(name).splitlines()[0].lstrip("# ").strip()
        print(f"{name:24s} {first}")
    return EXIT_PASS


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "model": cmd_model, "presets": cmd_presets}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ScenarioError, ConfigError, TrafficError, DomainError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
