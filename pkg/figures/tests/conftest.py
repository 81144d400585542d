import csv
import math

import pytest

CURVE_HEADER = ["tau", "failures", "runs", "p", "se", "n", "c",
                "strategy", "beta", "topology", "seed"]
ETA_HEADER = ["tau_eval", "eta", "se", "runs", "n", "c",
              "strategy", "beta", "topology", "seed"]
FIT_HEADER = ["n", "c", "strategy", "beta", "a", "tau_c", "residual", "points_used"]


def write_curve(path, n, c, strategy="uniform", beta=None, a=0.8, tau_c=50.0,
                taus=range(0, 201, 10), runs=100_000, topology="complete", seed=1):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_HEADER)
        for tau in taus:
            p = a * math.exp(-tau / tau_c)
            fails = int(round(p * runs))
            se = math.sqrt(p * (1 - p) / runs)
            w.writerow([tau, fails, runs, repr(p), repr(se), n, c, strategy,
                        "" if beta is None else repr(float(beta)), topology, seed])
    return path


def write_fits(path, rows):
    """rows: iterable of (n, c, a, tau_c)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(FIT_HEADER)
        for n, c, a, tau_c in rows:
            w.writerow([n, c, "uniform", "", repr(a), repr(tau_c), repr(0.01), 12])
    return path


def write_eta_grid(path, n=5, tau_eval=100, runs=1000):
    columns = [("uniform", None), ("gibbs", 0.1), ("gibbs", 0.3),
               ("gibbs", 0.5), ("topc", None)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ETA_HEADER)
        fh.write("# synthetic grid\n")
        for c in range(1, n + 1):
            for j, (strategy, beta) in enumerate(columns):
                eta = round(0.05 * c + 0.1 * j, 3)
                se = math.sqrt(eta * (1 - eta) / runs)
                w.writerow([tau_eval, repr(eta), repr(se), runs, n, c, strategy,
                            "" if beta is None else repr(beta), "cycle", 7])
    return path


@pytest.fixture
def curve_file(tmp_path):
    return write_curve(tmp_path / "curve_c5.csv", n=10, c=5)


@pytest.fixture
def eta_file(tmp_path):
    return write_eta_grid(tmp_path / "table1.csv")
