"""Figure specifications and rendering.

Three figure kinds cover the bundles the simulation CLI emits:

- ``share_curve``: one long-run share curve per sampling size m, from
  the sweep table (columns m, ratio, share).
- ``time_series``: strategy frequencies over time, one panel per CSV.
- ``simplex_orbit``: trajectories projected onto the 2-simplex via the
  standard ternary embedding; 4-strategy states are first aggregated
  (default (x1, x2, x3 + x4)) and the collapsed coordinate gets its own
  time-series panel beside the orbit.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = ("share_curve", "time_series", "simplex_orbit")

#: deterministic per-curve styling
PALETTE = ("#1f77b4", "#2ca02c", "#d62728", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


class PlotError(ValueError):
    """Input bundle cannot be rendered (missing columns, empty data)."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: the kind, the input CSVs, styling and the target."""

    kind: str
    inputs: tuple[str, ...]
    output: str
    title: str = ""
    labels: tuple[str, ...] = ()
    #: index groups used to aggregate >3-strategy states for the orbit
    aggregate: tuple[tuple[int, ...], ...] | None = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise PlotError(f"unknown figure kind '{self.kind}'")
        if not self.inputs:
            raise PlotError("figure needs at least one input CSV")
        if self.labels and len(self.labels) != len(self.inputs):
            raise PlotError("labels must match inputs one to one")


@dataclass(frozen=True)
class TrajectoryData:
    times: np.ndarray
    states: np.ndarray
    events: tuple[str, ...]
    columns: tuple[str, ...]


def read_trajectory(path) -> TrajectoryData:
    """Load a trajectory CSV (columns t, x1..xN, event)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = list(reader)
    if not header or header[0] != "t" or header[-1] != "event":
        raise PlotError(f"{path}: expected columns t, x1..xN, event, got {header}")
    cols = tuple(header[1:-1])
    if not cols or any(c != f"x{i + 1}" for i, c in enumerate(cols)):
        raise PlotError(f"{path}: malformed state columns {cols}")
    if not rows:
        raise PlotError(f"{path}: no data rows")
    times = np.array([float(r[0]) for r in rows])
    states = np.array([[float(v) for v in r[1:-1]] for r in rows])
    events = tuple(r[-1] for r in rows)
    return TrajectoryData(times, states, events, cols)


def read_share_curve(path) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Load the sweep table; returns {m: (ratios, shares)}."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        rows = list(reader)
    if header != ["m", "ratio", "share"]:
        raise PlotError(f"{path}: expected columns m, ratio, share, got {header}")
    if not rows:
        raise PlotError(f"{path}: no data rows")
    out: dict[int, tuple[list, list]] = {}
    for m, ratio, share in rows:
        out.setdefault(int(m), ([], []))
        out[int(m)][0].append(float(ratio))
        out[int(m)][1].append(float(share))
    return {m: (np.array(r), np.array(s)) for m, (r, s) in sorted(out.items())}


# ternary embedding of the 2-simplex: (a, b, c) -> (b + c/2, c*sqrt(3)/2)
_SIMPLEX_X = np.array([0.0, 1.0, 0.5])
_SIMPLEX_Y = np.array([0.0, 0.0, np.sqrt(3.0) / 2.0])


def simplex_projection(states: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if states.shape[1] != 3:
        raise PlotError(f"simplex projection needs 3 coordinates, got {states.shape[1]}")
    return states @ _SIMPLEX_X, states @ _SIMPLEX_Y


def _aggregate(states: np.ndarray, groups: Sequence[Sequence[int]]) -> np.ndarray:
    for g in groups:
        for idx in g:
            if idx >= states.shape[1]:
                raise PlotError(f"aggregation index {idx} out of range for {states.shape[1]} columns")
    return np.column_stack([states[:, list(g)].sum(axis=1) for g in groups])


def _label(spec: FigureSpec, k: int) -> str:
    if spec.labels:
        return spec.labels[k]
    return Path(spec.inputs[k]).stem


def _render_share_curve(spec: FigureSpec, ax):
    curves = read_share_curve(spec.inputs[0])
    for k, (m, (ratios, shares)) in enumerate(curves.items()):
        ax.plot(ratios, shares, color=PALETTE[k % len(PALETTE)], label=f"m = {m}")
    ax.set_xlabel("payoff ratio")
    ax.set_ylabel("long-run share of the weaker strategy")
    ax.set_xlim(0.0, 1.0)
    ax.set_ylim(-0.02, 0.55)
    ax.legend(loc="upper left", frameon=False)


def _render_time_series(spec: FigureSpec, ax):
    for k, path in enumerate(spec.inputs):
        data = read_trajectory(path)
        base = PALETTE[k % len(PALETTE)]
        for j in range(data.states.shape[1]):
            ax.plot(
                data.times,
                data.states[:, j],
                color=base,
                alpha=1.0 - 0.55 * j / max(1, data.states.shape[1] - 1),
                linewidth=1.0,
                label=f"{_label(spec, k)} x{j + 1}" if data.states.shape[1] <= 4 else None,
            )
    ax.set_xlabel("t")
    ax.set_ylabel("frequency")
    ax.set_ylim(-0.02, 1.02)
    handles, _ = ax.get_legend_handles_labels()
    if handles:
        ax.legend(loc="upper right", frameon=False, fontsize=7)


def _render_simplex_orbit(spec: FigureSpec, ax_orbit, ax_extra):
    drew_extra = False
    for k, path in enumerate(spec.inputs):
        data = read_trajectory(path)
        states = data.states
        groups = spec.aggregate
        if states.shape[1] > 3 and groups is None:
            groups = ((0,), (1,), tuple(range(2, states.shape[1])))
        if groups is not None:
            projected = _aggregate(states, groups)
        else:
            projected = states
        xs, ys = simplex_projection(projected)
        color = PALETTE[k % len(PALETTE)]
        if xs.size == 1:
            ax_orbit.plot(xs, ys, marker="o", color=color, label=_label(spec, k))
        else:
            ax_orbit.plot(xs, ys, color=color, linewidth=0.8, label=_label(spec, k))
        if states.shape[1] > 3 and ax_extra is not None:
            ax_extra.plot(data.times, states[:, -1], color=color, linewidth=0.9)
            drew_extra = True
    tri_x = np.append(_SIMPLEX_X, _SIMPLEX_X[0])
    tri_y = np.append(_SIMPLEX_Y, _SIMPLEX_Y[0])
    ax_orbit.plot(tri_x, tri_y, color="black", linewidth=0.8)
    ax_orbit.set_aspect("equal")
    ax_orbit.axis("off")
    ax_orbit.legend(loc="upper right", frameon=False, fontsize=7)
    if ax_extra is not None:
        if drew_extra:
            ax_extra.set_xlabel("t")
            ax_extra.set_ylabel("last coordinate")
        else:
            ax_extra.axis("off")


def render(spec: FigureSpec) -> str:
    """Render the figure and return the written image path."""
    for path in spec.inputs:
        if not Path(path).exists():
            raise PlotError(f"input CSV {path} does not exist")
    if spec.kind == "simplex_orbit":
        fig, (ax_orbit, ax_extra) = plt.subplots(1, 2, figsize=(9.0, 4.2))
        _render_simplex_orbit(spec, ax_orbit, ax_extra)
    else:
        fig, ax = plt.subplots(figsize=(6.4, 4.2))
        if spec.kind == "share_curve":
            _render_share_curve(spec, ax)
        else:
            _render_time_series(spec, ax)
    if spec.title:
        fig.suptitle(spec.title)
    out = Path(spec.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return str(out)
