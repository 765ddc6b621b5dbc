"""Simplex geometry and the containers shared by every other module.

A population state is a point on the standard simplex, stored as a plain
1-D numpy array of strategy frequencies.  `validate_state` is the single
entry point that turns raw vectors into states; everything downstream
assumes its output.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

#: tolerance for accepting raw input vectors as simplex points
VALIDATION_TOL = 1e-9
#: tolerance for accumulated drift during numerical integration
DRIFT_TOL = 1e-7


class SimplexError(ValueError):
    """Vector cannot be interpreted as a point on the simplex."""


def validate_state(v: Iterable[float], tol: float = VALIDATION_TOL) -> np.ndarray:
    """Validate ``v`` as a simplex point, clamping tiny negatives and
    renormalizing round-off in the total mass.

    Already-valid input (entries >= 0, sum exactly 1.0) is returned
    unchanged, which makes the operation idempotent.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise SimplexError(f"state must be a 1-D vector with at least 2 entries, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise SimplexError("state contains non-finite entries")
    lo = float(v.min())
    if lo < -tol:
        raise SimplexError(f"entry {lo} below -tol={-tol}")
    s = float(v.sum())
    if abs(s - 1.0) > tol:
        raise SimplexError(f"mass {s} deviates from 1 by more than tol={tol}")
    if lo >= 0.0 and s == 1.0:
        return v
    w = np.clip(v, 0.0, None)
    w /= w.sum()
    # nudge one entry so the mass is exactly 1.0 in floating point, which
    # is what makes repeated validation a no-op; a single entry can get
    # stuck oscillating one ulp around the target, so fall through the
    # entries from largest to smallest until the residual closes
    for j in np.argsort(w)[::-1]:
        resid = 1.0 - float(w.sum())
        for _ in range(4):
            if resid == 0.0:
                return w
            w[int(j)] += resid
            resid = 1.0 - float(w.sum())
    return w


def barycenter(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def tangent_projection(v: Iterable[float]) -> np.ndarray:
    """Project a payoff/velocity vector onto the tangent space of the
    simplex: subtract the mean so the components sum to zero."""
    v = np.asarray(v, dtype=float)
    return v - v.mean()


def aggregate(x: Iterable[float], groups: Sequence[Sequence[int]]) -> np.ndarray:
    """Sum strategy frequencies over index groups (used to merge twins)."""
    x = np.asarray(x, dtype=float)
    return np.array([x[list(g)].sum() for g in groups])


def distance_to_center(
    x: Iterable[float],
    p: Iterable[float],
    groups: Sequence[Sequence[int]] | None = None,
) -> float:
    """Euclidean distance from ``x`` to ``p``, optionally after summing
    the frequencies listed in ``groups`` (e.g. ``[(0,), (1,), (2, 3)]``
    to merge a twin pair before measuring)."""
    x = np.asarray(x, dtype=float)
    p = np.asarray(p, dtype=float)
    if groups is not None:
        x = aggregate(x, groups)
        if p.size != x.size:
            p = aggregate(p, groups)
    if x.size != p.size:
        raise ValueError(f"arity mismatch: {x.size} vs {p.size}")
    return float(np.linalg.norm(x - p))


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped solution samples, with optional event markers
    (one string per sample, empty when nothing happened)."""

    times: np.ndarray
    states: np.ndarray
    events: tuple[str, ...] = ()

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        s = np.asarray(self.states, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "states", s)
        if t.ndim != 1 or s.ndim != 2 or s.shape[0] != t.size:
            raise ValueError("states must be (len(times), N)")
        if t.size > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("times must be strictly increasing")
        if self.events and len(self.events) != t.size:
            raise ValueError("events must align with times")

    def __len__(self) -> int:
        return self.times.size

    @property
    def arity(self) -> int:
        return self.states.shape[1]

    @property
    def final_state(self) -> np.ndarray:
        return self.states[-1]

    def event_list(self) -> tuple[str, ...]:
        if self.events:
            return self.events
        return ("",) * len(self)

    def tail(self, window_fraction: float) -> "Trajectory":
        """Sub-trajectory covering the final ``window_fraction`` of the
        simulated time span."""
        if not 0.0 < window_fraction < 1.0:
            raise ValueError("window_fraction must be in (0, 1)")
        t0, t1 = self.times[0], self.times[-1]
        cut = t1 - window_fraction * (t1 - t0)
        k = int(np.searchsorted(self.times, cut))
        k = min(k, len(self) - 1)
        ev = self.event_list()[k:] if self.events else ()
        return Trajectory(self.times[k:], self.states[k:], ev)

    def to_csv(self, path) -> None:
        write_trajectory_csv(self, path)

    @staticmethod
    def from_csv(path) -> "Trajectory":
        return read_trajectory_csv(path)


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """CSV schema: ``t,x1,...,xN,event`` with shortest round-trip floats."""
    n = traj.arity
    header = "t," + ",".join(f"x{i + 1}" for i in range(n)) + ",event"
    lines = [header]
    for t, row, ev in zip(traj.times, traj.states, traj.event_list()):
        lines.append(repr(float(t)) + "," + ",".join(repr(float(v)) for v in row) + "," + ev)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_trajectory_csv(path) -> Trajectory:
    with open(path, "r", encoding="utf-8") as fh:
        rows = [line.rstrip("\n") for line in fh if line.strip()]
    header = rows[0].split(",")
    if header[0] != "t" or header[-1] != "event":
        raise ValueError(f"unexpected trajectory header: {rows[0]}")
    n = len(header) - 2
    times, states, events = [], [], []
    for line in rows[1:]:
        parts = line.split(",")
        times.append(float(parts[0]))
        states.append([float(v) for v in parts[1 : 1 + n]])
        events.append(parts[1 + n])
    ev = tuple(events) if any(events) else ()
    return Trajectory(np.array(times), np.array(states), ev)
