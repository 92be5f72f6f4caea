import io
import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from irs_parafac.cli import main
from irs_parafac.errors import InfeasibleDesign
from irs_parafac.estimators import TALS_DEFAULTS, BalsOptions
from irs_parafac.harness import (BUILTIN, CSV_COLUMNS, ExperimentSpec, builtin_spec,
                                 emit_report, load_report, load_spec, parse_csv,
                                 parse_grid, run_experiment, run_seed, spec_from_ini,
                                 spec_to_ini, write_csv)
from irs_parafac.harness.runner import THREADS_ENV, checksum, default_threads
from irs_parafac.system_model import PerturbationConfig, SystemConfig, build_scenario

DATA = Path(__file__).parent / "data"
MINI = DATA / "mini.ini"


def csv_text(report):
    buf = io.StringIO()
    write_csv(report.cells, buf)
    return buf.getvalue()


@pytest.fixture(scope="module")
def mini_report():
    return run_experiment(load_spec(MINI), threads=1)


# ------------------------------------------------------------------ spec

def test_parse_grid():
    assert parse_grid("0:5:30") == (0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0)
    assert parse_grid("0, 12.5") == (0.0, 12.5)
    assert parse_grid("inf") == (math.inf,)
    with pytest.raises(ValueError):
        parse_grid("0:0:10")


def test_spec_from_ini_fields():
    spec = load_spec(MINI)
    assert spec.runs == 10 and spec.master_seed == 3 and not spec.timing
    assert spec.estimators == ("ls", "krf", "bals")
    assert [k for k, _ in spec.sweep_points()] == ["N=3", "N=4"]
    assert spec.sweep_points()[0][1].N == 3


def test_spec_ini_sections_and_cartesian_sweep():
    text = """
[experiment]
runs = 2
estimators = tals
snr_grid_db = 10
[system]
M = 4
L = 2
K = 8
T = 4
[perturbation]
gamma = 0.05
[tals]
delta = 1e-7
restarts = 2
[sweep]
N = 4, 8
perturbation = on, off
"""
    spec = spec_from_ini(text)
    assert spec.base.perturbation == PerturbationConfig(0.2, 0.05)
    assert spec.tals_options.delta == 1e-7 and spec.tals_options.restarts == 2
    assert spec.tals_options.line_search == TALS_DEFAULTS.line_search
    keys = [k for k, _ in spec.sweep_points()]
    assert keys == ["N=4;perturbation=on", "N=4;perturbation=off",
                    "N=8;perturbation=on", "N=8;perturbation=off"]
    assert spec.sweep_points()[1][1].perturbation is None


def test_spec_ini_roundtrip():
    for spec in [load_spec(MINI), builtin_spec("fig9"), builtin_spec("fig3")]:
        back = spec_from_ini(spec_to_ini(spec))
        assert back.to_dict() == spec.to_dict()
    # paired (M, T) values are not a grid
    with pytest.raises(ValueError):
        spec_to_ini(builtin_spec("fig8"))


@pytest.mark.parametrize("text", [
    "[system]\nM = 3\n",
    "[experiment]\nestimators = nope\n",
    "[experiment]\nruns = 0\n",
    "[experiment]\n[system]\nQ = 1\n",
    "[experiment]\n[bals]\nfoo = 1\n",
])
def test_spec_rejects_bad_input(text):
    with pytest.raises(ValueError):
        spec_from_ini(text)


def test_run_seed_streams():
    a = run_seed(1, 0, 0, 0).standard_normal(3)
    assert np.array_equal(a, run_seed(1, 0, 0, 0).standard_normal(3))
    assert not np.array_equal(a, run_seed(1, 0, 0, 1).standard_normal(3))
    assert not np.array_equal(a, run_seed(1, 0, 0, 0, 3).standard_normal(3))


# ---------------------------------------------------------------- runner

def test_report_row_count_and_columns(mini_report):
    # 2 sweep points x 2 SNRs x 3 estimators
    assert len(mini_report.cells) == 12
    text = csv_text(mini_report)
    assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
    assert len(mini_report.checksums) == 2 * 2 * 10


def test_golden_csv(mini_report):
    assert csv_text(mini_report) == (DATA / "mini_golden.csv").read_text()


def test_golden_values_are_consistent(mini_report):
    # square designs: LS error equals the normalised bound exactly
    for key in ("N=4",):
        for snr in (0.0, 20.0):
            c = mini_report.cell("ls", key, snr)
            assert c.nmse_theta == pytest.approx(c.crb_norm, rel=1e-12)
    for c in mini_report.cells:
        assert c.failures == 0
        if c.estimator != "ls":
            assert c.nmse_theta < mini_report.cell("ls", c.sweep_key, c.snr_db).nmse_theta


def test_thread_count_invariance(mini_report):
    spec = load_spec(MINI)
    par = run_experiment(spec, threads=2)
    assert csv_text(par) == csv_text(mini_report)
    assert par.checksums == mini_report.checksums


def test_reproducible_and_seed_sensitive(mini_report):
    spec = load_spec(MINI)
    assert csv_text(run_experiment(spec)) == csv_text(mini_report)
    other = run_experiment(spec.replace(master_seed=4))
    assert csv_text(other) != csv_text(mini_report)


def test_checksum_matches_scenario(mini_report):
    spec = load_spec(MINI)
    cfg = spec.sweep_points()[1][1].replace(snr_db=20.0)
    sc = build_scenario(cfg, run_seed(spec.master_seed, 1, 1, 7))
    assert mini_report.checksums["1/1/7"] == checksum(sc.Y)


def test_infeasible_pairs():
    spec = ExperimentSpec(SystemConfig(M=2, L=2, N=6, K=4, T=2, random_phase_fallback=True),
                          (10.0,), ("krf", "bals"), 3, timing=False)
    with pytest.raises(InfeasibleDesign):
        run_experiment(spec)
    rep = run_experiment(spec.replace(skip_infeasible=True))
    assert [c.estimator for c in rep.cells] == ["bals"]
    forced = run_experiment(spec, force=True)
    krf_cell = forced.cell("krf", "base", 10.0)
    assert krf_cell.failures == 3 and math.isnan(krf_cell.nmse_theta)


def test_unbuildable_design_rejected():
    spec = ExperimentSpec(SystemConfig(N=5, K=4), (0.0,), ("bals",), 1)
    with pytest.raises(InfeasibleDesign):
        run_experiment(spec, force=True)


def test_tals_and_block_ls_cells():
    base = SystemConfig(M=4, L=3, N=4, K=8, T=4, perturbation=PerturbationConfig(0.2, 0.01))
    spec = ExperimentSpec(base, (30.0,), ("tals", "block_ls", "bals_orth"), 3, timing=False,
                          tals_options=BalsOptions(max_iter=300, line_search=True))
    rep = run_experiment(spec)
    t = rep.cell("tals", "base", 30.0)
    assert t.failures == 0 and 0 < t.iters_mean <= 300 and 0 <= t.conv_rate <= 1
    assert math.isfinite(t.nmse_H) and math.isfinite(t.nmse_G)
    b = rep.cell("block_ls", "base", 30.0)
    assert b.nmse_theta < 0.01 and math.isnan(b.nmse_H) and math.isnan(b.iters_mean)


def test_timing_column():
    spec = load_spec(MINI).replace(runs=2, timing=True)
    rep = run_experiment(spec)
    assert all(c.time_ms > 0 for c in rep.cells)


def test_default_threads_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "3")
    assert default_threads() == 3
    monkeypatch.setenv(THREADS_ENV, "x")
    assert default_threads() == 1
    monkeypatch.delenv(THREADS_ENV)
    assert default_threads() == 1


# ---------------------------------------------------------------- report

def test_csv_roundtrip(mini_report):
    cells = parse_csv(io.StringIO(csv_text(mini_report)))
    assert csv_text(type(mini_report)(spec={}, cells=cells)) == csv_text(mini_report)
    with pytest.raises(ValueError):
        parse_csv(io.StringIO("a,b\n"))


@pytest.mark.parametrize("fmt", ["csv", "structured_text"])
def test_emit_and_load(tmp_path, mini_report, fmt):
    path = tmp_path / "out.dat"
    files = emit_report(mini_report, path, fmt)
    assert len(files) == (2 if fmt == "csv" else 1)
    back = load_report(path, fmt)
    assert csv_text(back) == csv_text(mini_report)
    assert back.checksums == mini_report.checksums
    assert back.spec["runs"] == 10
    if fmt == "structured_text":
        doc = json.loads(path.read_text())
        assert doc["cells"][0]["time_ms"] == "nan"


def test_emit_bad_format(tmp_path, mini_report):
    with pytest.raises(ValueError):
        emit_report(mini_report, tmp_path / "x", "xml")


def test_curve_and_cell(mini_report):
    snr, vals = mini_report.curve("krf", "N=3")
    assert snr == [0.0, 20.0] and vals[1] < vals[0]
    with pytest.raises(KeyError):
        mini_report.cell("tals", "N=3", 0.0)


# ------------------------------------------------------------ built-ins

def test_builtin_specs_plan():
    from irs_parafac.harness.runner import plan
    for name in BUILTIN:
        spec = builtin_spec(name)
        points = plan(spec)
        assert points
    fig3 = dict((k, e) for k, _, e in plan(builtin_spec("fig3")))
    assert fig3 == {"N=50": ("krf", "bals"), "N=100": ("bals",)}
    with pytest.raises(KeyError):
        builtin_spec("fig1")


# ------------------------------------------------------------------- CLI

def test_cli_crb(capsys):
    assert main(["crb", "3", "2", "50", "50", "4", "--sigma2", "1"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "quantity,value"
    assert out[3] == "trace,1.5"


def test_cli_run_to_stdout_matches_golden(capsys):
    assert main(["run", str(MINI)]) == 0
    assert capsys.readouterr().out == (DATA / "mini_golden.csv").read_text()


def test_cli_run_overrides(tmp_path, capsys):
    out = tmp_path / "r.json"
    code = main(["run", str(MINI), "--runs", "2", "--seed", "9", "--threads", "2",
                 "--format", "structured_text", "--out", str(out)])
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["spec"]["runs"] == 2 and doc["spec"]["master_seed"] == 9
    assert "wrote" in capsys.readouterr().err


def test_cli_check(tmp_path, capsys):
    assert main(["check", str(MINI)]) == 0
    assert "[N=3]" in capsys.readouterr().out
    fig3 = tmp_path / "fig3.ini"
    fig3.write_text(spec_to_ini(builtin_spec("fig3")))
    assert main(["check", str(fig3)]) == 0
    out = capsys.readouterr().out
    assert "krf: NOT feasible" in out
    strict = tmp_path / "strict.ini"
    strict.write_text(spec_to_ini(builtin_spec("fig3").replace(skip_infeasible=False)))
    assert main(["check", str(strict)]) == 1


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[experiment]\nestimators = krf\n[system]\nN = 8\nK = 4\n"
                   "random_phase_fallback = true\n")
    assert main(["run", str(bad)]) == 1
    assert main(["run", str(tmp_path / "missing.ini")]) == 2
    garbage = tmp_path / "garbage.ini"
    garbage.write_text("not an ini file")
    assert main(["run", str(garbage)]) == 64
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 64
    with pytest.raises(SystemExit) as exc:
        main(["crb", "3", "2"])
    assert exc.value.code == 64
    capsys.readouterr()


def test_cli_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "irs_parafac", "crb", "2", "2", "3", "4", "2",
                           "--sigma2", "2"], capture_output=True, text=True, check=True)
    assert "trace,3" in proc.stdout
