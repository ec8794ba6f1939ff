"""Static chart rendering for sweep and trajectory tables.

Everything draws through the Agg backend and saves to vector files;
there is no interactive display path.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import IO

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ParseError, ValidityError

CHART_KINDS = ("trajectory", "heatmap", "scatter")

plt.rcParams.update({
    "figure.dpi": 110,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
})


def read_table(stream: IO[str]) -> list[dict]:
    """CSV rows as dicts; numeric-looking fields become floats."""
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise ParseError("empty table")
    rows = []
    for raw in reader:
        row = {}
        for key, value in raw.items():
            if key is None or value is None:
                raise ParseError("ragged table row")
            try:
                row[key] = float(value)
            except ValueError:
                row[key] = value
        rows.append(row)
    return rows


def _require_columns(rows: list[dict], needed: tuple[str, ...], kind: str) -> None:
    missing = [c for c in needed if c not in rows[0]]
    if missing:
        raise ValidityError(f"{kind} chart needs columns {missing}, not present in table")


def _build_trajectory(rows: list[dict]):
    _require_columns(rows, ("phi", "t", "avg_opinion"), "trajectory")
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    phis = sorted({row["phi"] for row in rows})
    for phi in phis:
        by_t: dict[float, list[float]] = {}
        for row in rows:
            if row["phi"] == phi:
                by_t.setdefault(row["t"], []).append(row["avg_opinion"])
        ts = sorted(by_t)
        means = [float(np.mean(by_t[t])) for t in ts]
        ax.plot(ts, means, label=f"phi = {phi:g}")
    ax.set_xlabel("step")
    ax.set_ylabel("average opinion")
    ax.legend(fontsize=8)
    return fig


def _build_heatmap(rows: list[dict]):
    _require_columns(rows, ("lambda_mean", "kappa", "shift"), "heatmap")
    use = rows
    if "phi" in rows[0]:
        # Shifts are measured against phi = 0, so plot the largest phi.
        target = max(row["phi"] for row in rows)
        use = [row for row in rows if row["phi"] == target]
    lams = sorted({row["lambda_mean"] for row in use})
    kaps = sorted({row["kappa"] for row in use})
    cells: dict[tuple[float, float], list[float]] = {}
    for row in use:
        v = row["shift"]
        if isinstance(v, float) and not np.isnan(v):
            cells.setdefault((row["lambda_mean"], row["kappa"]), []).append(v)
    grid = np.full((len(kaps), len(lams)), np.nan)
    for (lam, kap), values in cells.items():
        grid[kaps.index(kap), lams.index(lam)] = float(np.mean(values))

    fig, ax = plt.subplots(figsize=(1.2 * len(lams) + 2.2, 1.0 * len(kaps) + 1.8))
    ax.grid(False)
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="RdBu_r")
    ax.set_xticks(range(len(lams)), [f"{v:g}" for v in lams])
    ax.set_yticks(range(len(kaps)), [f"{v:g}" for v in kaps])
    ax.set_xlabel("lambda_mean")
    ax.set_ylabel("kappa")
    for i in range(len(kaps)):
        for j in range(len(lams)):
            if not np.isnan(grid[i, j]):
                ax.text(j, i, f"{grid[i, j]:.3g}", ha="center", va="center", fontsize=8)
    fig.colorbar(im, ax=ax, label="mean shift")
    return fig


def _build_scatter(rows: list[dict]):
    _require_columns(rows, ("one_off_bias", "long_run_avg"), "scatter")
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    xs = [row["one_off_bias"] for row in rows]
    ys = [row["long_run_avg"] for row in rows]
    if "phi" in rows[0]:
        phis = sorted({row["phi"] for row in rows})
        for phi in phis:
            sub = [(x, y) for x, y, r in zip(xs, ys, rows) if r["phi"] == phi]
            ax.scatter([p[0] for p in sub], [p[1] for p in sub], s=14,
                       label=f"phi = {phi:g}", alpha=0.8)
        ax.legend(fontsize=8)
    else:
        ax.scatter(xs, ys, s=14, alpha=0.8)
    ax.set_xlabel("one-off bias")
    ax.set_ylabel("long-run average opinion")
    return fig


_BUILDERS = {
    "trajectory": _build_trajectory,
    "heatmap": _build_heatmap,
    "scatter": _build_scatter,
}


def emit_charts(rows: list[dict], kind: str, path) -> Path:
    """Render one chart kind from table rows into a static file."""
    if kind not in _BUILDERS:
        raise ValidityError(f"chart kind must be one of {CHART_KINDS}, got {kind!r}")
    if not rows:
        raise ValidityError("nothing to plot")
    fig = _BUILDERS[kind](rows)
    out = Path(path)
    try:
        fig.tight_layout()
        fig.savefig(out)
    finally:
        plt.close(fig)
    return out
