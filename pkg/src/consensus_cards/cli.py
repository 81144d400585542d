"""Command-line driver: run ensembles, sweep parameters, fit curves.

Subcommands:
  run     one ensemble -> failure-curve CSV (and eta CSV with --eta)
  sweep   one ensemble per value of c, n or beta -> per-value CSVs + summary
  fit     exponential-tail fits of curve CSVs (optionally a scaling collapse)
  table1  the 5x5 pentagon individual-error grid (C in 1..5 x five noise
          settings) at a late evaluation time

Exit codes: 0 success, 2 bad usage/config, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .analysis import fit_exponential, scaling_check
from .ensemble import (
    CURVE_HEADER,
    ETA_HEADER,
    estimate_eta,
    read_curve_csv,
    resolve_threads,
    run_ensemble_result,
    write_curve_csv,
    write_eta_csv,
)
from .errors import ConsensusCardsError
from .model import SimConfig, make_topology

USAGE_EXIT = 2
RUNTIME_EXIT = 1

# Pentagon grid defaults; the five noise settings are the uniform limit,
# three finite Gibbs temperatures, and the top-C limit.
TABLE1_N = 5
TABLE1_BETAS = (0.1, 0.3, 0.5)
TABLE1_REFERENCE_ETA = 0.23
FIT_HEADER = ("n", "c", "strategy", "beta", "a", "tau_c", "residual", "points_used")
COLLAPSE_HEADER = ("n", "c", "x", "tau_c", "collapsed", "f_x", "rel_err")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consensus-cards",
        description="Monte Carlo simulator for the common-card consensus task.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one ensemble and write its failure curve")
    _add_sim_flags(run_p)
    run_p.add_argument("--eta", action="store_true",
                       help="also write the individual-error (eta) CSV")
    run_p.add_argument("--eta-tau", type=int, default=None,
                       help="checkpoint for eta evaluation (default: last checkpoint)")
    run_p.add_argument("--eta-out", type=Path, default=None,
                       help="eta CSV path (default: <out>.eta.csv)")
    run_p.add_argument("--out", type=Path, required=True, help="failure-curve CSV path")
    run_p.add_argument("--save-config", type=Path, default=None,
                       help="write the resolved config file and continue")

    sweep_p = sub.add_parser("sweep", help="one ensemble per value of a sweep axis")
    _add_sim_flags(sweep_p)
    sweep_p.add_argument("--axis", choices=("c", "n", "beta"), required=True)
    sweep_p.add_argument("--values", type=str, required=True,
                         help="comma-separated sweep values")
    sweep_p.add_argument("--out-dir", type=Path, required=True)

    fit_p = sub.add_parser("fit", help="exponential-tail fits of curve CSVs")
    fit_p.add_argument("--input", type=Path, nargs="+", required=True)
    fit_p.add_argument("--out", type=Path, default=None,
                       help="fit-report CSV (default: stdout)")
    fit_p.add_argument("--scaling", action="store_true",
                       help="also report the tau_c collapse against f(x) = 1.75(1/x - 1)")
    fit_p.add_argument("--scaling-out", type=Path, default=None,
                       help="collapse CSV (default: stdout)")

    t1_p = sub.add_parser("table1", help="pentagon individual-error grid")
    t1_p.add_argument("--runs", type=int, default=100_000)
    t1_p.add_argument("--tau-eval", type=int, default=10_000)
    t1_p.add_argument("--seed", type=int, default=0)
    t1_p.add_argument("--threads", type=int, default=None)
    t1_p.add_argument("--out", type=Path, required=True)
    return parser


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="flat key-value config file; explicit flags override it")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--strategy", choices=("uniform", "topc", "gibbs"), default=None)
    p.add_argument("--beta", type=float, default=None)
    p.add_argument("--topology", choices=("complete", "cycle"), default=None)
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--tau-max", type=int, default=None)
    p.add_argument("--checkpoints", type=str, default=None,
                   help="comma list and/or inclusive start:stop:step ranges")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--enum-cap", type=int, default=None)


def read_config_file(path: Path) -> dict[str, str]:
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConsensusCardsError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        mapping[key.strip()] = value.strip()
    return mapping


def write_config_file(config: SimConfig, path: Path) -> None:
    lines = [f"{key} = {value}" for key, value in config.to_mapping().items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _config_from_args(args) -> SimConfig:
    mapping = read_config_file(args.config) if args.config else {}
    overrides = {
        "n": args.n,
        "c": args.c,
        "strategy": args.strategy,
        "beta": args.beta,
        "topology": args.topology,
        "runs": args.runs,
        "tau_max": args.tau_max,
        "checkpoints": args.checkpoints,
        "seed": args.seed,
        "enum_cap": args.enum_cap,
    }
    for key, value in overrides.items():
        if value is not None:
            mapping[key] = str(value)
    mapping.setdefault("topology", "complete")
    mapping.setdefault("runs", "100000")
    if args.strategy == "gibbs" and args.beta is None and "beta" not in mapping:
        raise ConsensusCardsError("gibbs strategy requires --beta")
    if args.strategy in ("uniform", "topc"):
        mapping["beta"] = ""
    missing = [k for k in ("n", "c", "strategy", "topology", "tau_max",
                           "checkpoints", "seed") if k not in mapping]
    if missing:
        raise ConsensusCardsError(
            f"missing required settings: {', '.join('--' + m.replace('_', '-') for m in missing)}")
    return SimConfig.from_mapping(mapping)


def cmd_run(args) -> int:
    config = _config_from_args(args)
    if args.save_config:
        write_config_file(config, args.save_config)
    result = run_ensemble_result(config, threads=args.threads)
    curve = result.curve()
    write_curve_csv(curve, args.out)
    print(f"wrote {args.out} ({len(curve.rows)} checkpoint rows, {config.runs} runs)")
    if args.eta:
        if not config.checkpoints:
            raise ConsensusCardsError("--eta needs at least one checkpoint")
        tau_eval = args.eta_tau if args.eta_tau is not None else config.checkpoints[-1]
        est = result.eta_at(tau_eval)
        eta_path = args.eta_out or args.out.with_suffix(args.out.suffix + ".eta.csv")
        write_eta_csv([est], config, eta_path)
        print(f"wrote {eta_path} (eta = {est.eta:.6f} at tau = {tau_eval})")
    return 0


def _parse_sweep_values(axis: str, text: str) -> list:
    tokens = [t for t in (tok.strip() for tok in text.split(",")) if t]
    if not tokens:
        raise ConsensusCardsError("sweep needs a non-empty value list")
    return [float(t) if axis == "beta" else int(t) for t in tokens]


def cmd_sweep(args) -> int:
    values = _parse_sweep_values(args.axis, args.values)
    # seed the swept field with the first value; it is replaced per point
    if args.axis == "beta" and args.beta is None:
        args.beta = values[0]
    elif args.axis == "c" and args.c is None:
        args.c = values[0]
    elif args.axis == "n" and args.n is None:
        args.n = values[0]
    base = _config_from_args(args)
    if args.axis == "beta" and base.strategy != "gibbs":
        raise ConsensusCardsError("beta sweep requires --strategy gibbs")
    args.out_dir.mkdir(parents=True, exist_ok=True)
    summary_rows = []
    for value in values:
        if args.axis == "c":
            config = base.with_updates(c=value)
        elif args.axis == "n":
            config = base.with_updates(n=value, topology=make_topology(base.topology.kind, value))
        else:
            config = base.with_updates(beta=value)
        curve = run_ensemble_result(config, threads=args.threads).curve()
        label = f"{args.axis}{value:g}" if args.axis == "beta" else f"{args.axis}{value}"
        path = args.out_dir / f"curve_{label}.csv"
        write_curve_csv(curve, path)
        print(f"wrote {path}")
        summary_rows.append((value, curve))
    summary = args.out_dir / "sweep_summary.csv"
    with open(summary, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("axis", "value") + CURVE_HEADER)
        for value, curve in summary_rows:
            for row in curve.rows:
                writer.writerow([args.axis, value, row.tau, row.failures, row.runs,
                                 repr(row.p), repr(row.se), curve.n, curve.c,
                                 curve.strategy,
                                 repr(curve.beta) if curve.beta is not None else "",
                                 curve.topology, curve.seed])
    print(f"wrote {summary}")
    return 0


def cmd_fit(args) -> int:
    fits = []
    for path in args.input:
        curve = read_curve_csv(path)
        fit = fit_exponential(curve)
        fits.append((curve, fit))
    out_rows = [[curve.n, curve.c, curve.strategy,
                 repr(curve.beta) if curve.beta is not None else "",
                 repr(fit.a), repr(fit.tau_c), repr(fit.residual), fit.points_used]
                for curve, fit in fits]
    _emit_csv(args.out, FIT_HEADER, out_rows)
    if args.scaling:
        table = [(curve.n, curve.c, fit.tau_c) for curve, fit in fits if curve.c < curve.n]
        if not table:
            raise ConsensusCardsError("--scaling needs at least one fit with C < N")
        report = scaling_check(table)
        rows = [[pt.n, pt.c, repr(pt.x), repr(pt.tau_c), repr(pt.collapsed),
                 repr(pt.reference), repr(pt.rel_err)] for pt in report.points]
        _emit_csv(args.scaling_out, COLLAPSE_HEADER, rows,
                  comments=(f"rms_dev = {report.rms_dev!r}",))
    return 0


def _emit_csv(path, header, rows, comments: tuple[str, ...] = ()) -> None:
    if path is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        for line in comments:
            sys.stdout.write(f"# {line}\n")
        writer.writerows(rows)
        return
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for line in comments:
            fh.write(f"# {line}\n")
        writer.writerows(rows)
    print(f"wrote {path}")


def table1_cells() -> list[tuple[str, float | None]]:
    """(strategy, beta) for the five noise columns, uniform through top-C."""
    cells: list[tuple[str, float | None]] = [("uniform", None)]
    cells.extend(("gibbs", beta) for beta in TABLE1_BETAS)
    cells.append(("topc", None))
    return cells


def cmd_table1(args) -> int:
    threads = resolve_threads(args.threads)
    rows = []
    for c in range(1, TABLE1_N + 1):
        for strategy, beta in table1_cells():
            config = SimConfig(
                n=TABLE1_N, c=c, strategy=strategy, beta=beta,
                topology=make_topology("cycle", TABLE1_N),
                tau_max=args.tau_eval, checkpoints=(args.tau_eval,),
                master_seed=args.seed, runs=args.runs)
            est = estimate_eta(config, args.tau_eval, threads=threads)
            rows.append((config, est))
            print(f"C={c} {strategy}{'' if beta is None else f'(beta={beta})'}: "
                  f"eta = {est.eta:.4f}")
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(ETA_HEADER)
        fh.write("# uniform rows are the zero-beta (infinite noise) column; "
                 "topc rows are the beta -> infinity column\n")
        fh.write(f"# reference experimental eta (pentagon groups, Leavitt 1951): "
                 f"{TABLE1_REFERENCE_ETA}\n")
        for config, est in rows:
            writer.writerow([
                est.tau_eval, repr(est.eta), repr(est.se), config.runs,
                config.n, config.c, config.strategy,
                repr(float(config.beta)) if config.beta is not None else "",
                config.topology.kind, config.master_seed,
            ])
    print(f"wrote {args.out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"run": cmd_run, "sweep": cmd_sweep, "fit": cmd_fit, "table1": cmd_table1}
    try:
        return handlers[args.command](args)
    except ConsensusCardsError as exc:
        # Config/usage problems -> 2; failures while producing results -> 1.
        from .errors import InsufficientDataError
        if isinstance(exc, InsufficientDataError):
            print(f"error: {exc}", file=sys.stderr)
            return RUNTIME_EXIT
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_EXIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_EXIT


if __name__ == "__main__":
    sys.exit(main())
