import csv
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otflow.cli import build_parser, main, parse_config, synthesize_initial, UsageError
from otflow.geometry import integrate, write_density_csv, sine_density


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def data_rows(path):
    lines = [l for l in open(path) if not l.startswith("#")]
    return list(csv.reader(lines))


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        build_parser().parse_args(["--version"])
    assert exc.value.code == 0
    assert "0.1.0" in capsys.readouterr().out


def test_flow_defaults_are_filled():
    args = parse_config(["flow", "--energy", "dirichlet", "--tau", "1e-6"])
    assert args.tau == 1e-6 and args.n == 256 and args.seed == 0 and args.halvings == 0


def test_flag_beats_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("energy = log\ntau = 2e-6\n# comment\nn = 64\n")
    args = parse_config(["flow", "--config", str(cfg), "--tau", "1e-6"])
    assert args.tau == 1e-6 and args.n == 64 and str(args.energy) == "log"


def test_unknown_config_key_is_named(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("stepsize = 1\n")
    code, _, err = run(capsys, "flow", "--config", cfg, "--energy", "dirichlet")
    assert code == 2 and "stepsize" in err


def test_bad_config_value_is_named(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n = 100\n")
    code, _, err = run(capsys, "energy", "--config", cfg, "--energy", "dirichlet", "--input", "uniform")
    assert code == 2 and "'n'" in err


@pytest.mark.parametrize(
    "argv",
    [
        ["flow", "--energy", "power:0"],
        ["energy", "--energy", "dirichlet", "--input", "uniform", "--n", "100"],
        ["energy", "--energy", "dirichlet", "--input", "nosuchfile.csv"],
        ["flow", "--energy", "dirichlet", "--initial", "paper-ce:h=2"],
        ["energy", "--energy", "dirichlet", "--input", "sine:amp=1.5"],
        ["lambda", "--c", "1", "--m", "0"],
        ["flow", "--energy", "dirichlet", "--budget", "q=1"],
        [],
    ],
)
def test_usage_errors(argv, capsys):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_descriptors():
    assert np.all(synthesize_initial("uniform", 64).values == 1.0)
    u = synthesize_initial("sine:amp=0.5,mode=1", 64)
    x = np.arange(64) / 64
    assert np.allclose(u.values, 1 + 0.5 * np.sin(2 * np.pi * x))
    assert integrate(u.values) == pytest.approx(1.0)
    ce = synthesize_initial("paper-ce:h=2", 256, allow_zeros=True)
    assert integrate(ce.values) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(UsageError):
        synthesize_initial("sine:amp=0.1,freq=2", 64)


@given(st.floats(0.0, 0.95), st.integers(1, 5))
def test_sine_descriptor_mass(amp, mode):
    u = synthesize_initial(f"sine:amp={amp},mode={mode}", 64)
    assert integrate(u.values) == pytest.approx(1.0, abs=1e-12)


def test_distance_and_map(tmp_path, capsys):
    code, out, _ = run(capsys, "distance", "--source", "uniform", "--target", "sine:amp=0.3",
                       "--n", 64, "--map-output", tmp_path / "m.csv", "--plot", tmp_path / "m.png")
    assert code == 0 and out.startswith("w2 ")
    assert (tmp_path / "m.png").stat().st_size > 0
    text = (tmp_path / "m.csv").read_text()
    assert text.startswith("# otflow 0.1.0") and '"n": 64' in text


def test_csv_input(tmp_path, capsys):
    path = tmp_path / "u.csv"
    write_density_csv(path, sine_density(64, 0.5))
    code, out, _ = run(capsys, "energy", "--energy", "dirichlet", "--input", path, "--n", 64,
                       "--first-variation", tmp_path / "fv.csv")
    assert code == 0
    assert float(out.split()[1]) == pytest.approx(np.pi**2 / 4, rel=1e-10)
    assert data_rows(tmp_path / "fv.csv")[0] == ["x", "dE"]


def test_geodesic_outputs(tmp_path, capsys):
    code, out, _ = run(capsys, "geodesic", "--source", "uniform", "--target", "sine:amp=0.3",
                       "--n", 64, "--s", "0.25,0.75", "--output", tmp_path / "g.csv")
    assert code == 0 and len(out.splitlines()) == 2
    assert (tmp_path / "g_s0.25.csv").exists() and (tmp_path / "g_s0.75.csv").exists()


def test_counterexample_table(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("OTFLOW_THREADS", "2")
    out_csv = tmp_path / "ce.csv"
    code, _, _ = run(capsys, "counterexample", "--h", "1,2,4,8", "--output", out_csv,
                     "--plot", tmp_path / "ce.png")
    rows = data_rows(out_csv)
    assert code == 0 and rows[0] == ["h", "A", "B", "A_over_h2"]
    assert [float(r[0]) for r in rows[1:]] == [1, 2, 4, 8]
    assert all(float(r[1]) < 0 for r in rows[1:])


def test_bad_thread_count(capsys, monkeypatch):
    monkeypatch.setenv("OTFLOW_THREADS", "many")
    code, _, _ = run(capsys, "counterexample", "--h", "1")
    assert code == 2


def test_hessian_and_lambda(capsys):
    code, out, _ = run(capsys, "hessian", "--input", "sine:amp=0.2", "--n", 64)
    vals = dict(line.split() for line in out.splitlines())
    assert code == 0
    assert float(vals["analytic"]) == pytest.approx(float(vals["numeric"]), rel=1e-3)
    code, out, _ = run(capsys, "lambda", "--c", 1, "--m", 1)
    vals = dict(line.split() for line in out.splitlines())
    assert float(vals["alpha"]) == 52.0 and float(vals["lambda"]) < 0


def test_flow_pde_compare(tmp_path, capsys):
    code, _, _ = run(capsys, "flow", "--energy", "dirichlet", "--n", 64, "--tau", "2e-6",
                     "--horizon", "1e-5", "--output", tmp_path / "f.json",
                     "--dump-densities", tmp_path / "d", "--plot", tmp_path / "f.png")
    assert code == 0
    data = json.loads((tmp_path / "f.json").read_text())
    assert data["otflow_version"] == "0.1.0" and data["config"]["tau"] == 2e-6
    rec = data["records"]
    assert len(rec) == 6
    assert set(rec[0]) == {"n", "t", "energy", "w2_increment", "residual", "min_density", "density"}
    assert len(list((tmp_path / "d").glob("step_*.csv"))) == 6
    code, _, _ = run(capsys, "pde", "--energy", "dirichlet", "--n", 64, "--horizon", "1e-5",
                     "--save", 5, "--output", tmp_path / "p.json")
    assert code == 0
    code, out, _ = run(capsys, "compare", tmp_path / "f.json", tmp_path / "p.json",
                       "--output", tmp_path / "c.csv")
    assert code == 0
    rows = data_rows(tmp_path / "c.csv")
    assert rows[0] == ["t", "sup", "l2", "energy_gap"]
    assert max(float(r[1]) for r in rows[1:]) < 1e-4
    code, _, _ = run(capsys, "compare", tmp_path / "f.json", tmp_path / "f.json")
    assert code == 0


def test_compare_rejects_non_trajectory(tmp_path, capsys):
    bad = tmp_path / "x.json"
    bad.write_text("{}")
    code, _, _ = run(capsys, "compare", bad, bad)
    assert code == 2


def test_budget_exit_reported(tmp_path, capsys):
    code, out, _ = run(capsys, "flow", "--energy", "dirichlet", "--n", 64, "--tau", "1e-5",
                       "--horizon", "1e-4", "--initial", "sine:amp=0.3",
                       "--budget", "c=10,m=0.5,delta=0.004", "--output", tmp_path / "f.json")
    assert code == 0 and "domain exit" in out
    data = json.loads((tmp_path / "f.json").read_text())
    assert data["exit_step"] is not None


def test_halving_study(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("OTFLOW_THREADS", "1")
    code, out, _ = run(capsys, "flow", "--energy", "dirichlet", "--n", 64, "--tau", "4e-6",
                       "--horizon", "8e-6", "--halvings", 1, "--output", tmp_path / "f.json",
                       "--convergence-plot", tmp_path / "cv.png")
    assert code == 0 and "tau,sup_gap,order" in out
    assert (tmp_path / "f_tau0.json").exists() and (tmp_path / "f_tau1.json").exists()
    assert (tmp_path / "cv.png").exists()


def test_numerical_failure_exit_code(capsys):
    code, _, err = run(capsys, "pde", "--energy", "dirichlet", "--n", 64, "--method", "rk4",
                       "--dt", "1e-4", "--horizon", "1e-3")
    assert code == 3


def test_certify_report(tmp_path, capsys):
    code, out, _ = run(capsys, "certify", "--c", 2, "--m", 0.5, "--samples", 3, "--n", 64,
                       "--initial", "sine:amp=0.05", "--output", tmp_path / "c.json")
    data = json.loads((tmp_path / "c.json").read_text())
    assert code == 0 and data["samples"] == 3 and data["violations"] == []
