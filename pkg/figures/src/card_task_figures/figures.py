"""Figure builders over the simulator's CSV outputs.

Each builder returns `(fig, series)` where `series` maps a label to the
plotted arrays, exactly as read from the CSVs (reference curves and
presentation fits are separate entries tagged in the label).  Rendering is
read-only over its inputs: building a figure twice from the same files
yields identical series.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .schema import SchemaError, read_curve, read_eta, read_fits

FIGURE_IDS = ("fig1", "fig2", "fig3", "fig4", "fig5", "table1")


@dataclass(frozen=True)
class FigureSpec:
    """One figure request: id, input CSVs, optional fit report, output path."""

    figure_id: str
    inputs: tuple[str, ...]
    out: str
    fits: str | None = None
    tau: int | None = None

    def __post_init__(self):
        if self.figure_id not in FIGURE_IDS:
            raise ValueError(f"unknown figure id {self.figure_id!r}")
        if not self.inputs:
            raise ValueError("at least one input CSV is required")


def collapse_reference(x: float) -> float:
    return 1.75 * (1.0 / x - 1.0)


def _logspace_fit_line(xs, ys):
    """Presentation least squares of log y against x; returns slope, intercept."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    keep = ys > 0
    slope, intercept = np.polyfit(xs[keep], np.log(ys[keep]), 1)
    return slope, intercept


def build_fig1(curve_paths, fits_path=None):
    """Failure probability vs time, one curve per C, semi-log; optional
    exponential-fit overlays from a fit report."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    series = {}
    fits = {(r.n, r.c): r for r in read_fits(fits_path)} if fits_path else {}
    for path in curve_paths:
        rows = read_curve(path)
        n, c = rows[0].n, rows[0].c
        taus = [r.tau for r in rows]
        ps = [r.p for r in rows]
        label = f"C={c}"
        series[label] = {"x": taus, "y": ps}
        ax.semilogy(taus, ps, "o", ms=3, label=label)
        fit = fits.get((n, c))
        if fit is not None:
            grid = np.linspace(min(taus), max(taus), 200)
            line = fit.a * np.exp(-grid / fit.tau_c)
            series[f"fit C={c}"] = {"x": grid.tolist(), "y": line.tolist()}
            ax.semilogy(grid, line, "-", lw=1, color=ax.lines[-1].get_color())
    ax.set_xlabel(r"$\tau$")
    ax.set_ylabel(r"$P_\tau$")
    ax.legend(fontsize=8)
    return fig, series


def build_fig2(fits_paths):
    """Collapse of the fitted time constants: tau_c / N^(3/2) against C/N,
    semi-log, with the 1.75 (1/x - 1) reference curve."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    series = {}
    by_n: dict[int, list] = {}
    for path in fits_paths:
        for row in read_fits(path):
            if row.c < row.n:
                by_n.setdefault(row.n, []).append(row)
    if not by_n:
        raise SchemaError("no fit rows with C < N to collapse")
    for n in sorted(by_n):
        rows = sorted(by_n[n], key=lambda r: r.c / r.n)
        xs = [r.c / r.n for r in rows]
        ys = [r.tau_c / r.n**1.5 for r in rows]
        label = f"N={n}"
        series[label] = {"x": xs, "y": ys}
        ax.semilogy(xs, ys, "o", ms=4, label=label)
    grid = np.linspace(min(min(s["x"]) for s in series.values()), 0.99, 300)
    ref = [collapse_reference(x) for x in grid]
    series["reference"] = {"x": grid.tolist(), "y": ref}
    ax.semilogy(grid, ref, "k-", lw=1)
    ax.set_xlabel("C/N")
    ax.set_ylabel(r"$\tau_c / N^{3/2}$")
    ax.legend(fontsize=8)
    return fig, series


def build_fig3(fits_paths):
    """Full-deck (C = N) time constant against N, with a linear fit line."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    rows = []
    for path in fits_paths:
        rows.extend(r for r in read_fits(path) if r.c == r.n)
    if not rows:
        raise SchemaError("no fit rows with C = N")
    rows.sort(key=lambda r: r.n)
    xs = [r.n for r in rows]
    ys = [r.tau_c for r in rows]
    series = {"tau_c": {"x": xs, "y": ys}}
    ax.plot(xs, ys, "o", ms=5)
    if len(rows) >= 2:
        slope, intercept = np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)
        grid = np.linspace(min(xs), max(xs), 50)
        line = intercept + slope * grid
        series["linear fit"] = {"x": grid.tolist(), "y": line.tolist()}
        ax.plot(grid, line, "k-", lw=1,
                label=f"{intercept:+.2f} + {slope:.3f} N")
        ax.legend(fontsize=8)
    ax.set_xlabel("N")
    ax.set_ylabel(r"$\tau_c$")
    return fig, series


def build_fig4(curve_paths, tau=None):
    """Plateau failure probability against C/N per N, with the 1 - C/N
    dashed reference."""
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    by_n: dict[int, list] = {}
    for path in curve_paths:
        rows = read_curve(path)
        if tau is None:
            row = max(rows, key=lambda r: r.tau)
        else:
            match = [r for r in rows if r.tau == tau]
            if not match:
                raise SchemaError(f"{path}: no row at tau={tau}")
            row = match[0]
        by_n.setdefault(row.n, []).append(row)
    series = {}
    for n in sorted(by_n):
        rows = sorted(by_n[n], key=lambda r: r.c / r.n)
        xs = [r.c / r.n for r in rows]
        ys = [r.p for r in rows]
        label = f"N={n}"
        series[label] = {"x": xs, "y": ys}
        ax.plot(xs, ys, "o-", ms=4, lw=0.8, label=label)
    grid = np.linspace(0.0, 1.0, 101)
    series["reference"] = {"x": grid.tolist(), "y": (1.0 - grid).tolist()}
    ax.plot(grid, 1.0 - grid, "k--", lw=1)
    ax.set_xlabel("C/N")
    ax.set_ylabel(r"$P_\infty$")
    ax.legend(fontsize=8)
    return fig, series


def build_fig5(curve_paths):
    """Failure probability against the noise parameter beta, one series per
    checkpoint time, semi-log, with an exp(-b/beta) fit of the latest time."""
    points: dict[int, list] = {}
    for path in curve_paths:
        rows = read_curve(path)
        beta = rows[0].beta
        if beta is None:
            raise SchemaError(f"{path}: expected gibbs curves with a beta value")
        for r in rows:
            points.setdefault(r.tau, []).append((beta, r.p))
    fig, ax = plt.subplots(figsize=(6.4, 4.8))
    series = {}
    for tau in sorted(points):
        pts = sorted(points[tau])
        label = f"tau={tau}"
        series[label] = {"x": [b for b, _ in pts], "y": [p for _, p in pts]}
        ax.semilogy(series[label]["x"], series[label]["y"], "o-", ms=4, lw=0.8,
                    label=label)
    last = max(points)
    xs = [b for b, _ in sorted(points[last])]
    ys = [p for _, p in sorted(points[last])]
    if sum(p > 0 for p in ys) >= 3:
        slope, intercept = _logspace_fit_line([1.0 / b for b in xs], ys)
        a, b = math.exp(intercept), -slope
        grid = np.linspace(min(xs), max(xs), 200)
        line = a * np.exp(-b / grid)
        series[f"fit tau={last}"] = {"x": grid.tolist(), "y": line.tolist()}
        ax.semilogy(grid, line, "k-", lw=1, label=f"{a:.3f} exp(-{b:.3f}/beta)")
    ax.set_xlabel(r"$\beta$")
    ax.set_ylabel(r"$P_\tau$")
    ax.legend(fontsize=8)
    return fig, series


REFERENCE_ETA = 0.23


def build_table1(eta_path):
    """Annotated grid of individual-error rates by C and noise column, with
    the 0.23 field-study reference called out."""
    rows = read_eta(eta_path)

    def column_key(r):
        if r.strategy == "uniform":
            return 0.0
        if r.strategy == "topc":
            return math.inf
        return r.beta

    cs = sorted({r.c for r in rows})
    cols = sorted({column_key(r) for r in rows})
    grid = np.full((len(cs), len(cols)), np.nan)
    for r in rows:
        grid[cs.index(r.c), cols.index(column_key(r))] = r.eta
    if np.isnan(grid).any():
        raise SchemaError(f"{eta_path}: grid is missing cells")

    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(cols), 1.2 + 0.6 * len(cs)))
    im = ax.imshow(grid, cmap="viridis", vmin=0.0, vmax=1.0)
    labels = ["0" if c == 0.0 else ("inf" if math.isinf(c) else f"{c:g}") for c in cols]
    ax.set_xticks(range(len(cols)), [f"beta={t}" for t in labels])
    ax.set_yticks(range(len(cs)), [f"C={c}" for c in cs])
    for i in range(len(cs)):
        for j in range(len(cols)):
            ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                    color="w" if grid[i, j] < 0.6 else "k", fontsize=8)
    ax.set_title(f"runs with any individual error (field reference {REFERENCE_ETA})")
    fig.colorbar(im, ax=ax, shrink=0.8)
    series = {"grid": {"x": labels, "y": cs, "values": grid.tolist()}}
    return fig, series


def render_figure(spec: FigureSpec):
    """Build the figure and write the image; returns the plotted series."""
    if spec.figure_id == "fig1":
        fig, series = build_fig1(spec.inputs, spec.fits)
    elif spec.figure_id == "fig2":
        fig, series = build_fig2(spec.inputs)
    elif spec.figure_id == "fig3":
        fig, series = build_fig3(spec.inputs)
    elif spec.figure_id == "fig4":
        fig, series = build_fig4(spec.inputs, spec.tau)
    elif spec.figure_id == "fig5":
        fig, series = build_fig5(spec.inputs)
    else:
        if len(spec.inputs) != 1:
            raise SchemaError("table1 takes exactly one eta CSV")
        fig, series = build_table1(spec.inputs[0])
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return series
