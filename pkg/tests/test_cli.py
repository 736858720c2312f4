import argparse

import pytest

from eeenet import analytic
from eeenet.analytic import ModelInput
from eeenet.cli import EXIT_FAIL, EXIT_PASS, EXIT_USAGE, build_parser, main, model_values
from eeenet.runner import AGG_COLUMNS, CHAIN_COLUMNS, Check, _rel, _within
from eeenet.scenario import parse_scenario
from eeenet.runner import ScenarioResult, results_csv
from eeenet.traffic import DEFAULT_FRAME_MIX

SMALL = """
[topology]
kind = aggregation
n_sources = 4
[traffic]
loads = 0.3, 0.6
[run]
replications = 3
frames = 3000
"""


def test_model_subcommand_matches_functions(capsys):
    assert main(["model", "--load", "0.5"]) == EXIT_PASS
    printed = dict(line.split(" = ") for line in capsys.readouterr().out.splitlines())
    x = ModelInput.for_load(0.5, DEFAULT_FRAME_MIX, 10e9, 4480e-9)
    assert float(printed["w_eee_s"]) == analytic.w_eee(x)
    assert float(printed["w_mg1_s"]) == analytic.w_mg1(x)
    assert float(printed["delta_w_agg_s"]) == analytic.delta_w_agg(x.lam, 4480e-9)


def test_model_values_with_chain_length():
    args = build_parser().parse_args(["model", "--lambda", "8e5", "-n", "2", "--w-first", "3.27e-6"])
    out = model_values(args)
    assert (out["tandem_lo_s"], out["tandem_hi_s"]) == analytic.tandem_bounds(
        3.27e-6, analytic.TandemParams(2, 1.2e-6), 4480e-9)


def test_model_overload_is_usage_error(capsys):
    assert main(["model", "--load", "1.2"]) == EXIT_USAGE


def test_presets_listing(capsys):
    assert main(["presets"]) == EXIT_PASS
    out = capsys.readouterr().out
    assert "fig3" in out and "fig6" in out


def test_unknown_preset_is_usage_error(capsys):
    assert main(["run", "no_such_preset"]) == EXIT_USAGE
    assert "no preset" in capsys.readouterr().err


def test_bad_key_is_usage_error(tmp_path, capsys):
    p = tmp_path / "bad.scn"
    p.write_text(SMALL + "surprise = 1\n")
    assert main(["run", str(p)]) == EXIT_USAGE
    assert "line 10" in capsys.readouterr().err


def test_run_is_byte_identical(tmp_path):
    p = tmp_path / "s.scn"
    p.write_text(SMALL)
    outs = []
    for k in range(2):
        out = tmp_path / f"out{k}.csv"
        assert main(["run", str(p), "-o", str(out)]) == EXIT_PASS
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].decode().splitlines()[0].split(",") == AGG_COLUMNS


def test_parallel_run_matches_serial(tmp_path):
    p = tmp_path / "s.scn"
    p.write_text(SMALL)
    main(["run", str(p), "-o", str(tmp_path / "a.csv")])
    main(["run", str(p), "-o", str(tmp_path / "b.csv"), "-j", "2"])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_plot_data_file(tmp_path):
    p = tmp_path / "s.scn"
    p.write_text(SMALL)
    main(["run", str(p), "-o", str(tmp_path / "r.csv"), "--plot-data"])
    lines = (tmp_path / "r_model.csv").read_text().splitlines()
    assert lines[0].startswith("load,lambda_fps,model_eee_us")
    assert len(lines) == 201


def test_chain_csv_columns(tmp_path):
    p = tmp_path / "c.scn"
    p.write_text("[topology]\nkind = tandem\nchain = regular, eee*3\nchain_points = 1, 3\n"
                 "[traffic]\nloads = 0.4\n[run]\nreplications = 2\nframes = 2000\n")
    main(["run", str(p), "-o", str(tmp_path / "c.csv")])
    rows = (tmp_path / "c.csv").read_text().splitlines()
    assert rows[0].split(",")[:4] == ["n", "per_iface_added_us", "bound_lo_us", "bound_hi_us"]
    assert rows[0].split(",") == CHAIN_COLUMNS
    assert [r.split(",")[0] for r in rows[1:]] == ["1", "3"]


def test_empty_result_is_header_only():
    sc = parse_scenario(SMALL)
    assert results_csv(ScenarioResult(sc, [])) == ",".join(AGG_COLUMNS) + "\n"


def test_validate_exit_codes(tmp_path, capsys):
    p = tmp_path / "s.scn"
    p.write_text(SMALL)
    code = main(["validate", str(p), "--tolerance", "0.5"])
    out = capsys.readouterr().out
    assert code == EXIT_PASS, out
    assert "validation passed" in out
    assert main(["validate", str(p), "--tolerance", "1e-9"]) == EXIT_FAIL


def test_validate_examples():
    assert _rel(3.30e-6, 3.27e-6, "w_eee", "p", 0.05).passed
    assert _within(4.6e-6, 4.48e-6, 5.68e-6, "per_iface_added", "p").passed
    failing = _rel(4.0e-6, 3.27e-6, "w_eee", "p", 0.05)
    assert not failing.passed
    line = failing.line()
    assert "4.000000us" in line and "3.270000us" in line and line.startswith("[FAIL]")
