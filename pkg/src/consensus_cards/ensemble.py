"""Seeded parallel Monte Carlo harness with CSV emission.

Runs are independent: run i draws its two RNG streams from
(master_seed, i, stream_id) only, and per-checkpoint tallies are summed as
integers, so the aggregate is a pure function of the SimConfig regardless of
execution order or worker count.  Workers are plain threads; the compiled
kernel releases the GIL, so thread parallelism is real when it is active.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import InvalidConfigError
from .model import SimConfig
from .rng import run_bit_generators
from .samplers import gibbs_weight_table

THREADS_ENV = "CONSENSUS_CARDS_THREADS"

CURVE_HEADER = ("tau", "failures", "runs", "p", "se", "n", "c",
                "strategy", "beta", "topology", "seed")
ETA_HEADER = ("tau_eval", "eta", "se", "runs", "n", "c",
              "strategy", "beta", "topology", "seed")


def gibbs_exp_table(config: SimConfig) -> np.ndarray | None:
    """Weight lookup table for the kernel, when the config needs one."""
    return gibbs_weight_table(config.beta) if config.strategy == "gibbs" else None


@dataclass(frozen=True)
class CurveRow:
    tau: int
    failures: int
    runs: int
    p: float
    se: float


@dataclass(frozen=True)
class FailureCurve:
    """Estimated failure probability per checkpoint, with binomial errors."""

    rows: tuple[CurveRow, ...]
    n: int
    c: int
    strategy: str
    beta: float | None
    topology: str
    seed: int

    @property
    def runs(self) -> int:
        return self.rows[0].runs if self.rows else 0


@dataclass(frozen=True)
class EtaEstimate:
    """Fraction of runs with at least one individually wrong agent."""

    tau_eval: int
    eta: float
    se: float


@dataclass(frozen=True)
class EnsembleResult:
    """Raw per-checkpoint tallies of one ensemble."""

    config: SimConfig
    checkpoints: tuple[int, ...]
    failures: np.ndarray      # group decision wrong
    any_error: np.ndarray     # at least one agent individually wrong

    def curve(self) -> FailureCurve:
        runs = self.config.runs
        rows = tuple(
            CurveRow(tau=t, failures=int(f), runs=runs, p=_ratio(f, runs),
                     se=_binom_se(f, runs))
            for t, f in zip(self.checkpoints, self.failures)
        )
        return FailureCurve(rows=rows, n=self.config.n, c=self.config.c,
                            strategy=self.config.strategy, beta=self.config.beta,
                            topology=self.config.topology.kind,
                            seed=self.config.master_seed)

    def eta_at(self, tau_eval: int) -> EtaEstimate:
        if tau_eval not in self.checkpoints:
            raise InvalidConfigError(f"tau_eval={tau_eval} is not a checkpoint")
        i = self.checkpoints.index(tau_eval)
        runs = self.config.runs
        return EtaEstimate(tau_eval=tau_eval, eta=_ratio(self.any_error[i], runs),
                           se=_binom_se(self.any_error[i], runs))


def _ratio(k, n) -> float:
    return int(k) / n


def _binom_se(k, n) -> float:
    p = int(k) / n
    return math.sqrt(p * (1.0 - p) / n)


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_ensemble_result(config: SimConfig, threads: int | None = None,
                        run_indices: range | None = None) -> EnsembleResult:
    """Execute the ensemble and return raw tallies.

    `run_indices` (default range(config.runs)) exists for split/merge tests;
    per-run seeding depends only on the run index, never on the split.
    """
    nworkers = resolve_threads(threads)
    indices = range(config.runs) if run_indices is None else run_indices
    ncp = len(config.checkpoints)
    checkpoints = np.asarray(config.checkpoints, dtype=np.int64)
    observers, observeds = config.topology.pair_arrays()
    exp_table = gibbs_exp_table(config)
    strategy = backend.STRATEGY_CODES[config.strategy]
    beta = 0.0 if config.beta is None else float(config.beta)
    common = config.n + 1

    def worker(chunk: range) -> tuple[np.ndarray, np.ndarray]:
        fail = np.zeros(ncp, dtype=np.int64)
        anyerr = np.zeros(ncp, dtype=np.int64)
        choices = np.zeros(ncp, dtype=np.int32)
        errors = np.zeros(ncp, dtype=np.int32)
        for run_index in chunk:
            dyn_bg, dec_bg = run_bit_generators(config.master_seed, run_index)
            backend.simulate_run(config.n, config.c, strategy, beta,
                                 observers, observeds, checkpoints,
                                 config.tau_max, dyn_bg, dec_bg, exp_table,
                                 choices, errors, None)
            fail += choices != common
            anyerr += errors > 0
        return fail, anyerr

    chunks = _split(indices, nworkers)
    failures = np.zeros(ncp, dtype=np.int64)
    any_error = np.zeros(ncp, dtype=np.int64)
    if len(chunks) == 1:
        f, e = worker(chunks[0])
        failures += f
        any_error += e
    else:
        with ThreadPoolExecutor(max_workers=nworkers) as pool:
            for f, e in pool.map(worker, chunks):
                failures += f
                any_error += e
    return EnsembleResult(config=config, checkpoints=tuple(config.checkpoints),
                          failures=failures, any_error=any_error)


def _split(indices: range, nworkers: int) -> list[range]:
    total = len(indices)
    if total == 0 or nworkers <= 1:
        return [indices]
    size = math.ceil(total / nworkers)
    return [indices[i:i + size] for i in range(0, total, size)]


def run_ensemble(config: SimConfig, threads: int | None = None) -> FailureCurve:
    """config.runs independent runs, aggregated into a failure curve."""
    return run_ensemble_result(config, threads=threads).curve()


def estimate_eta(config: SimConfig, tau_eval: int, threads: int | None = None) -> EtaEstimate:
    """Fraction of runs with any wrong individual choice at tau_eval."""
    if tau_eval not in config.checkpoints:
        raise InvalidConfigError(f"tau_eval={tau_eval} is not a checkpoint")
    return run_ensemble_result(config, threads=threads).eta_at(tau_eval)


# ---------------------------------------------------------------------------
# CSV emission.  Floats are written with repr(), the shortest decimal that
# round-trips exactly.
# ---------------------------------------------------------------------------

def _beta_field(strategy: str, beta: float | None) -> str:
    return repr(float(beta)) if strategy == "gibbs" and beta is not None else ""


def write_curve_csv(curve: FailureCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CURVE_HEADER)
        for row in curve.rows:
            writer.writerow([
                row.tau, row.failures, row.runs, repr(row.p), repr(row.se),
                curve.n, curve.c, curve.strategy,
                _beta_field(curve.strategy, curve.beta), curve.topology, curve.seed,
            ])


def read_curve_csv(path) -> FailureCurve:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = tuple(next(reader))
        if header != CURVE_HEADER:
            raise ValueError(f"unexpected curve CSV header in {path}: {header}")
        rows = []
        meta = None
        for rec in reader:
            if not rec or rec[0].startswith("#"):
                continue
            tau, failures, runs, p, se, n, c, strategy, beta, topology, seed = rec
            rows.append(CurveRow(tau=int(tau), failures=int(failures),
                                 runs=int(runs), p=float(p), se=float(se)))
            meta = (int(n), int(c), strategy, float(beta) if beta else None,
                    topology, int(seed))
    if meta is None:
        raise ValueError(f"curve CSV {path} has no data rows")
    n, c, strategy, beta, topology, seed = meta
    return FailureCurve(rows=tuple(rows), n=n, c=c, strategy=strategy,
                        beta=beta, topology=topology, seed=seed)


def write_eta_csv(estimates, config: SimConfig, path, comments: tuple[str, ...] = ()) -> None:
    """One row per EtaEstimate; optional `# comment` lines after the header."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ETA_HEADER)
        for line in comments:
            fh.write(f"# {line}\n")
        for est in estimates:
            writer.writerow([
                est.tau_eval, repr(est.eta), repr(est.se), config.runs,
                config.n, config.c, config.strategy,
                _beta_field(config.strategy, config.beta),
                config.topology.kind, config.master_seed,
            ])
