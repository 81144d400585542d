import csv
import math
import subprocess
import sys

import pytest

from consensus_cards.cli import main
from consensus_cards.ensemble import read_curve_csv
from conftest import make_config


def run_cli(*argv):
    return main([str(a) for a in argv])


def write_synthetic_curve(path, a=0.5, tau_c=50.0, n=10, c=5, taus=range(150, 600, 10)):
    rows = []
    runs = 10_000_000
    for tau in taus:
        p = a * math.exp(-tau / tau_c)
        se = math.sqrt(p * (1 - p) / runs)
        rows.append([tau, int(round(p * runs)), runs, repr(p), repr(se),
                     n, c, "uniform", "", "complete", 1])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["tau", "failures", "runs", "p", "se", "n", "c",
                         "strategy", "beta", "topology", "seed"])
        writer.writerows(rows)


class TestRun:
    def test_checkpoint_arithmetic_41_rows(self, tmp_path):
        out = tmp_path / "curve.csv"
        code = run_cli("run", "--n", 6, "--c", 3, "--strategy", "uniform",
                       "--runs", 200, "--tau-max", 400,
                       "--checkpoints", "0:400:10", "--seed", 7, "--out", out)
        assert code == 0
        curve = read_curve_csv(out)
        assert len(curve.rows) == 41
        assert curve.seed == 7

    def test_c_out_of_range_is_usage_error(self, tmp_path, capsys):
        code = run_cli("run", "--n", 10, "--c", 11, "--strategy", "uniform",
                       "--runs", 10, "--tau-max", 10, "--checkpoints", "0:10:5",
                       "--seed", 1, "--out", tmp_path / "x.csv")
        assert code == 2
        assert "C must be in [1, N]" in capsys.readouterr().err

    def test_gibbs_requires_beta(self, tmp_path, capsys):
        code = run_cli("run", "--n", 5, "--c", 2, "--strategy", "gibbs",
                       "--runs", 10, "--tau-max", 10, "--checkpoints", "0",
                       "--seed", 1, "--out", tmp_path / "x.csv")
        assert code == 2
        assert "beta" in capsys.readouterr().err

    def test_eta_output(self, tmp_path):
        out = tmp_path / "curve.csv"
        code = run_cli("run", "--n", 5, "--c", 3, "--strategy", "gibbs",
                       "--beta", 0.1, "--topology", "cycle", "--runs", 100,
                       "--tau-max", 50, "--checkpoints", "0,50", "--seed", 3,
                       "--eta", "--out", out)
        assert code == 0
        eta_path = tmp_path / "curve.csv.eta.csv"
        lines = eta_path.read_text().splitlines()
        assert lines[0].startswith("tau_eval,eta,se,runs")
        assert lines[1].split(",")[0] == "50"

    def test_config_file_roundtrip(self, tmp_path):
        out1 = tmp_path / "a.csv"
        cfg_path = tmp_path / "sim.cfg"
        assert run_cli("run", "--n", 6, "--c", 2, "--strategy", "gibbs",
                       "--beta", 0.3, "--runs", 50, "--tau-max", 30,
                       "--checkpoints", "0:30:10", "--seed", 11, "--out", out1,
                       "--save-config", cfg_path) == 0
        out2 = tmp_path / "b.csv"
        assert run_cli("run", "--config", cfg_path, "--out", out2) == 0
        assert out1.read_text() == out2.read_text()

    def test_threads_do_not_change_output(self, tmp_path):
        outs = []
        for threads, name in ((1, "t1.csv"), (4, "t4.csv")):
            out = tmp_path / name
            assert run_cli("run", "--n", 6, "--c", 3, "--strategy", "gibbs",
                           "--beta", 0.2, "--runs", 120, "--tau-max", 25,
                           "--checkpoints", "0:25:5", "--seed", 9,
                           "--threads", threads, "--out", out) == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]


class TestSweep:
    def test_sweep_c(self, tmp_path):
        out_dir = tmp_path / "sweep"
        code = run_cli("sweep", "--axis", "c", "--values", "2,3",
                       "--n", 6, "--strategy", "uniform", "--runs", 50,
                       "--tau-max", 20, "--checkpoints", "0:20:5",
                       "--seed", 2, "--out-dir", out_dir)
        assert code == 0
        assert (out_dir / "curve_c2.csv").exists()
        assert (out_dir / "curve_c3.csv").exists()
        summary = (out_dir / "sweep_summary.csv").read_text().splitlines()
        assert summary[0].startswith("axis,value,tau,")
        assert len(summary) == 1 + 2 * 5

    def test_empty_values_usage_error(self, tmp_path, capsys):
        code = run_cli("sweep", "--axis", "c", "--values", " , ,",
                       "--n", 6, "--strategy", "uniform", "--runs", 10,
                       "--tau-max", 10, "--checkpoints", "0", "--seed", 1,
                       "--out-dir", tmp_path)
        assert code == 2
        assert "non-empty" in capsys.readouterr().err

    def test_beta_sweep(self, tmp_path):
        out_dir = tmp_path / "bsweep"
        code = run_cli("sweep", "--axis", "beta", "--values", "0.1,0.4",
                       "--n", 5, "--c", 2, "--strategy", "gibbs", "--runs", 30,
                       "--tau-max", 10, "--checkpoints", "0:10:5",
                       "--seed", 5, "--out-dir", out_dir)
        assert code == 0
        assert (out_dir / "curve_beta0.1.csv").exists()
        assert (out_dir / "curve_beta0.4.csv").exists()


class TestFit:
    def test_synthetic_recovery(self, tmp_path, capsys):
        src = tmp_path / "synth.csv"
        write_synthetic_curve(src)
        out = tmp_path / "fits.csv"
        assert run_cli("fit", "--input", src, "--out", out) == 0
        header, row = out.read_text().splitlines()
        assert header == "n,c,strategy,beta,a,tau_c,residual,points_used"
        fields = row.split(",")
        assert float(fields[5]) == pytest.approx(50.0, abs=1e-6)
        assert float(fields[4]) == pytest.approx(0.5, rel=1e-6)

    def test_insufficient_rows_is_runtime_error(self, tmp_path, capsys):
        src = tmp_path / "thin.csv"
        write_synthetic_curve(src, taus=[200, 210])
        assert run_cli("fit", "--input", src) == 1
        assert "need at least" in capsys.readouterr().err

    def test_scaling_report(self, tmp_path):
        files = []
        for n, c in [(10, 2), (10, 5), (20, 4)]:
            path = tmp_path / f"n{n}c{c}.csv"
            tau_c = n**1.5 * 1.75 * (n / c - 1)
            write_synthetic_curve(path, a=0.6, tau_c=tau_c, n=n, c=c,
                                  taus=range(0, int(9 * tau_c), max(1, int(tau_c / 8))))
            files.append(path)
        out = tmp_path / "fits.csv"
        collapse = tmp_path / "collapse.csv"
        assert run_cli("fit", "--input", *files, "--out", out,
                       "--scaling", "--scaling-out", collapse) == 0
        lines = collapse.read_text().splitlines()
        assert lines[0] == "n,c,x,tau_c,collapsed,f_x,rel_err"
        assert lines[1].startswith("# rms_dev")
        assert len(lines) == 2 + 3
        for line in lines[2:]:
            assert float(line.split(",")[6]) < 1e-4  # rel_err ~ 0 on synthetic


class TestTable1:
    def test_tiny_grid_shape(self, tmp_path):
        out = tmp_path / "grid.csv"
        code = run_cli("table1", "--runs", 40, "--tau-eval", 15,
                       "--seed", 1, "--out", out)
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0].startswith("tau_eval,eta,se,runs")
        comments = [ln for ln in lines if ln.startswith("#")]
        assert any("0.23" in ln for ln in comments)
        data = [ln for ln in lines[1:] if ln and not ln.startswith("#")]
        assert len(data) == 25
        strategies = [ln.split(",")[6] for ln in data]
        assert strategies.count("uniform") == 5
        assert strategies.count("topc") == 5
        assert strategies.count("gibbs") == 15


class TestConsoleScript:
    def test_entry_point_help(self):
        proc = subprocess.run([sys.executable, "-m", "consensus_cards.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "run" in proc.stdout and "table1" in proc.stdout
