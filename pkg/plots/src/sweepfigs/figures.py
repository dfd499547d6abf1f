"""Figure builders over the sweep CSV schema.

Input contract (the simulator's public CSV, comment lines start with '#'):
W, p_occ, p_loss, seed, L, delta, fill_rate, retention, iterations, moves,
batches, physical_time_s, compute_time_s, compressed. Derived columns
M = W^2 and N = L^2 are added on load. ``batches`` counts parallel transport
operations (one pickup-sweep-dropoff of a whole batch), which is the
move-count convention of the scaling figures; ``moves`` counts individual
source->dest transports.

Each builder returns the grouped data it drew, so tests can assert on
numbers instead of pixels. Rendering is a pure function of (CSV, spec):
fixed figure size, no timestamps in the output metadata.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "sweepfigs"  # deterministic SVG ids

import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

FIGURE_IDS = (
    "fill_vs_iteration",
    "retention_vs_size",
    "time_vs_width",
    "moves_vs_M",
    "moves_vs_N",
    "M_vs_N",
)

LOSS_COLORS = {0.0: "tab:blue", 0.01: "tab:orange", 0.05: "tab:green"}


@dataclass(frozen=True)
class FigureSpec:
    figure: str
    csv_path: str
    out_base: str
    filters: dict = field(default_factory=dict)
    fit_json: str | None = None

    def __post_init__(self) -> None:
        if self.figure not in FIGURE_IDS:
            raise ValueError(f"unknown figure {self.figure!r}, expected one of {FIGURE_IDS}")


def load_rows(csv_path: str) -> pd.DataFrame:
    df = pd.read_csv(csv_path, comment="#")
    required = {"W", "p_occ", "p_loss", "seed", "L", "fill_rate", "retention",
                "iterations", "moves", "batches", "physical_time_s", "compute_time_s"}
    missing = required - set(df.columns)
    if missing:
        raise ValueError(f"CSV lacks required columns: {sorted(missing)}")
    df["M"] = df["W"] * df["W"]
    df["N"] = df["L"] * df["L"]
    return df


def _apply_filters(df: pd.DataFrame, filters: dict) -> pd.DataFrame:
    for key, val in filters.items():
        if key not in df.columns:
            raise ValueError(f"filter column {key!r} not in CSV")
        if df[key].dtype.kind == "f":
            df = df[np.isclose(df[key], float(val))]
        else:
            df = df[df[key] == val]
    if df.empty:
        raise ValueError("no rows left after filtering")
    return df


def _loss_label(p_loss: float) -> str:
    return f"loss {p_loss:g}"


def _save(fig, out_base: str) -> list[str]:
    paths = []
    for ext in ("png", "svg"):
        path = f"{out_base}.{ext}"
        # strip volatile metadata so re-rendering is byte-identical
        fig.savefig(path, dpi=150, metadata={"Date": None} if ext == "svg" else None)
        paths.append(path)
    plt.close(fig)
    return paths


def build_fill_vs_iteration(df: pd.DataFrame) -> pd.DataFrame:
    """Fraction of runs at perfect fill by each iteration, per loss level.

    The CSV stores only the iteration at which each run first reached a
    perfect fill (or the cap it hit), so the curve plots cumulative
    convergence: at iteration k, the share of runs already done. Runs that
    never converged stay below 1 at the cap.
    """
    cap = int(df["iterations"].max())
    records = []
    for p_loss, group in df.groupby("p_loss"):
        done_at = group["iterations"].where(group["fill_rate"] >= 1.0)
        n = len(group)
        for k in range(1, cap + 1):
            frac = float((done_at <= k).sum()) / n
            err = math.sqrt(max(frac * (1 - frac), 0.0) / n)
            records.append(
                {"p_loss": p_loss, "iteration": k, "converged_fraction": frac, "stderr": err}
            )
    return pd.DataFrame.from_records(records)


def build_mean_curve(df: pd.DataFrame, x: str, y: str, group: str) -> pd.DataFrame:
    stats = (
        df.groupby([group, x])[y]
        .agg(mean="mean", std=lambda v: float(np.std(v)))
        .reset_index()
    )
    return stats.sort_values([group, x]).reset_index(drop=True)


def _overlay_fit(ax, fit_json: str | None) -> None:
    if not fit_json:
        return
    with open(fit_json) as fh:
        fit = json.load(fh)
    xs = np.array(ax.get_xlim())
    ax.plot(
        xs,
        fit["prefactor"] * xs ** fit["exponent"],
        "k--",
        linewidth=1,
        label=f"fit exponent {fit['exponent']:.3f}",
    )


def render(spec: FigureSpec) -> tuple[list[str], pd.DataFrame]:
    """Render one figure; returns (written paths, the plotted aggregates)."""
    df = _apply_filters(load_rows(spec.csv_path), spec.filters)
    fig, ax = plt.subplots(figsize=(6.0, 4.2))

    if spec.figure == "fill_vs_iteration":
        data = build_fill_vs_iteration(df)
        for p_loss, group in data.groupby("p_loss"):
            color = LOSS_COLORS.get(float(p_loss))
            ax.plot(group["iteration"], group["converged_fraction"], "-o",
                    color=color, label=_loss_label(float(p_loss)))
            ax.fill_between(
                group["iteration"],
                group["converged_fraction"] - group["stderr"],
                np.minimum(group["converged_fraction"] + group["stderr"], 1.0),
                alpha=0.2, color=color,
            )
        ax.set_xlabel("iteration")
        ax.set_ylabel("fraction of runs at perfect fill")
        ax.set_ylim(0, 1.05)

    elif spec.figure == "retention_vs_size":
        data = build_mean_curve(df, "W", "retention", "p_loss")
        for p_loss, group in data.groupby("p_loss"):
            color = LOSS_COLORS.get(float(p_loss))
            ax.plot(group["W"], group["mean"], "-o", color=color,
                    label=_loss_label(float(p_loss)))
            ax.fill_between(group["W"], group["mean"] - group["std"],
                            group["mean"] + group["std"], alpha=0.2, color=color)
        ax.set_xlabel("initial lattice side W")
        ax.set_ylabel("retention rate")

    elif spec.figure == "time_vs_width":
        phys = build_mean_curve(df, "W", "physical_time_s", "p_loss")
        comp = build_mean_curve(df, "W", "compute_time_s", "p_loss")
        total = phys.copy()
        total["mean"] = phys["mean"] + comp["mean"]
        for series, label, color in (
            (comp, "computational", "gold"),
            (phys, "physical", "magenta"),
            (total, "total", "green"),
        ):
            ax.plot(series["W"], series["mean"], "-o", color=color, label=label)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("lattice side W")
        ax.set_ylabel("time [s]")
        data = pd.concat(
            [phys.assign(kind="physical"), comp.assign(kind="computational"),
             total.assign(kind="total")],
            ignore_index=True,
        )

    elif spec.figure in ("moves_vs_M", "moves_vs_N"):
        x = "M" if spec.figure == "moves_vs_M" else "N"
        group = "p_occ" if spec.figure == "moves_vs_M" else "p_loss"
        data = build_mean_curve(df, x, "batches", group)
        for key, series in data.groupby(group):
            ax.plot(series[x], series["mean"], "o-", label=f"{group}={key:g}")
            ax.fill_between(series[x], series["mean"] - series["std"],
                            series["mean"] + series["std"], alpha=0.2)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("total sites M" if x == "M" else "target sites N")
        ax.set_ylabel("parallel moves (batches)")
        _overlay_fit(ax, spec.fit_json)

    elif spec.figure == "M_vs_N":
        data = build_mean_curve(df, "N", "M", "p_loss")
        for p_loss, series in data.groupby("p_loss"):
            color = LOSS_COLORS.get(float(p_loss))
            ax.plot(series["N"], series["mean"], "-o", color=color,
                    label=_loss_label(float(p_loss)))
        ax.set_xlabel("target sites N")
        ax.set_ylabel("initial sites M")

    ax.legend(loc="best", fontsize=9)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _save(fig, spec.out_base), data
