"""Numerical checkers for the structural conditions that drive the
dynamics (payoff monotonicity, positive correlation, the imitation flow
condition, twin advantage to rarity/frequency) plus long-run trajectory
statistics (tail windows, twin ratios, distance instrumentation)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .core import Trajectory, distance_to_center, validate_state
from .games import GameError, HypnodiskParams, PayoffFunction
from .protocols import RevisionProtocol, resolve_baseline, switch_rates

#: absolute payoff spread below which a supported strategy set counts as
#: a population equilibrium
EQUILIBRIUM_TOL = 1e-9
#: scaled threshold separating "strictly positive" from numerical zero
STRICT_TOL = 1e-12
#: per-capita growth / payoff tie band for ordering comparisons
TIE_TOL = 1e-10


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of a condition checker over a sample of states."""

    condition: str
    verdict: str  # holds | fails | inconclusive
    samples: int
    witness: dict | None = None
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.verdict not in ("holds", "fails", "inconclusive"):
            raise ValueError(f"unknown verdict '{self.verdict}'")
        if self.verdict == "fails" and self.witness is None:
            raise ValueError("a failing report must carry a witness")

    @property
    def holds(self) -> bool:
        return self.verdict == "holds"

    def to_json(self) -> dict:
        out = {"condition": self.condition, "verdict": self.verdict, "samples": self.samples}
        if self.witness is not None:
            out["witness"] = self.witness
        if self.details:
            out["details"] = self.details
        return out


def _witness(x: np.ndarray, **values) -> dict:
    w = {"state": [float(v) for v in x]}
    for key, val in values.items():
        if isinstance(val, np.ndarray):
            w[key] = [float(v) for v in val]
        else:
            w[key] = float(val)
    return w


def is_population_equilibrium(F: PayoffFunction, x, tol: float = EQUILIBRIUM_TOL) -> bool:
    """All strategies with positive frequency earn the same payoff."""
    x = validate_state(x)
    f = F(x)
    supported = f[x > 1e-9]
    return bool(supported.size == 0 or supported.max() - supported.min() <= tol)


def check_positive_correlation(field, F: PayoffFunction, states: Sequence) -> ConditionReport:
    """Sum_i xdot_i F_i must be strictly positive wherever the dynamics
    actually move, and may only vanish where the state is at rest.  A
    state with nonzero velocity but nonpositive correlation is the
    witness (this is how constant-payoff games expose drift toward a
    dominated strategy)."""
    n_checked = 0
    for raw in states:
        x = validate_state(raw)
        v = np.asarray(field(x), dtype=float)
        f = F(x)
        corr = float(v @ f)
        scale = max(1.0, float(np.max(np.abs(f)))) * max(1.0, float(np.max(np.abs(v))))
        moving = float(np.max(np.abs(v))) > 1e-10
        n_checked += 1
        if corr < -STRICT_TOL * scale or (moving and corr <= STRICT_TOL * scale):
            return ConditionReport(
                "positive_correlation",
                "fails",
                n_checked,
                _witness(x, velocity=v, payoffs=f, correlation=corr),
            )
    return ConditionReport("positive_correlation", "holds", n_checked)


def _percapita(field, x: np.ndarray) -> np.ndarray:
    if float(x.min()) <= 0.0:
        raise ValueError("per-capita growth rates need an interior state")
    return np.asarray(field(x), dtype=float) / x


def check_monotone(field, F: PayoffFunction, states: Sequence) -> ConditionReport:
    """Per-capita growth rates must be ordered exactly as payoffs, ties
    matched to ties (band 1e-10, scaled)."""
    n_checked = 0
    for raw in states:
        x = validate_state(raw)
        g = _percapita(field, x)
        f = F(x)
        tol_f = TIE_TOL * max(1.0, float(np.max(np.abs(f))))
        tol_g = TIE_TOL * max(1.0, float(np.max(np.abs(g))))
        n_checked += 1
        for i in range(x.size):
            for j in range(i + 1, x.size):
                df, dg = f[i] - f[j], g[i] - g[j]
                tie_f, tie_g = abs(df) <= tol_f, abs(dg) <= tol_g
                ok = (tie_f and tie_g) or (not tie_f and not tie_g and df * dg > 0.0)
                if not ok:
                    return ConditionReport(
                        "monotone",
                        "fails",
                        n_checked,
                        _witness(x, payoffs=f, percapita_growth=g, pair=np.array([i, j])),
                    )
    return ConditionReport("monotone", "holds", n_checked)


def _twin_pair(game: PayoffFunction) -> tuple[int, int]:
    pair = getattr(game, "twin_pair", None)
    if pair is None:
        raise GameError("game does not declare a twin pair")
    return pair


def check_advantage(field, game: PayoffFunction, states: Sequence, mode: str, proto: RevisionProtocol | None = None) -> ConditionReport:
    """Among exact twins the rarer (mode 'rarity') or the more frequent
    (mode 'frequency') twin must have the weakly higher per-capita
    growth rate; strictness is demanded only where the protocol shows
    flow out of (AR1 reading) or into (AR2 reading) the favoured twin."""
    if mode not in ("rarity", "frequency"):
        raise ValueError("mode must be 'rarity' or 'frequency'")
    i0, j0 = _twin_pair(game)
    resolved = None
    if proto is not None:
        resolved = RevisionProtocol(proto.selection, resolve_baseline(proto.adoption, game))
    n_checked = 0
    strict_checked = 0
    ar1_ok = ar2_ok = True
    for raw in states:
        x = validate_state(raw)
        f = game(x)
        if abs(f[i0] - f[j0]) > TIE_TOL * max(1.0, float(np.max(np.abs(f)))):
            raise GameError(f"payoffs of declared twins differ at {x}: {f[i0]} vs {f[j0]}")
        if abs(x[i0] - x[j0]) <= 1e-12:
            continue
        rare, freq = (i0, j0) if x[i0] < x[j0] else (j0, i0)
        fav, other = (rare, freq) if mode == "rarity" else (freq, rare)
        g = _percapita(field, x)
        gap = g[fav] - g[other]
        tol_g = TIE_TOL * max(1.0, float(np.max(np.abs(g))))
        n_checked += 1
        if gap < -tol_g:
            return ConditionReport(
                f"advantage_{mode}",
                "fails",
                n_checked,
                _witness(x, percapita_growth=g, favoured=fav, gap=gap),
            )
        if resolved is not None:
            rho = switch_rates(resolved, game, x)
            scale = max(1.0, float(np.max(rho)))
            out_flow = float(rho[fav].max()) > STRICT_TOL * scale
            in_flow = float(rho[:, fav].max()) > STRICT_TOL * scale
            if out_flow or in_flow:
                strict_checked += 1
                strict = gap > STRICT_TOL * max(1.0, float(np.max(np.abs(g))))
                if out_flow and not strict:
                    ar1_ok = False
                if in_flow and not strict:
                    ar2_ok = False
    details = {}
    if resolved is not None:
        details = {
            "strict_states": strict_checked,
            "strictness_AR1": bool(ar1_ok and strict_checked),
            "strictness_AR2": bool(ar2_ok and strict_checked),
        }
    if n_checked == 0:
        return ConditionReport(f"advantage_{mode}", "inconclusive", 0, details=details)
    return ConditionReport(f"advantage_{mode}", "holds", n_checked, details=details)


def check_imitation_condition(proto: RevisionProtocol, F: PayoffFunction, states: Sequence) -> ConditionReport:
    """Away from population equilibria every strategy must either
    imitate or be imitated: for each i some rho_ij or rho_ji is
    positive."""
    resolved = RevisionProtocol(proto.selection, resolve_baseline(proto.adoption, F))
    n_checked = 0
    for raw in states:
        x = validate_state(raw)
        if is_population_equilibrium(F, x):
            continue
        rho = switch_rates(resolved, F, x)
        scale = max(1.0, float(np.max(rho)))
        n_checked += 1
        for i in range(x.size):
            if max(float(rho[i].max()), float(rho[:, i].max())) <= STRICT_TOL * scale:
                return ConditionReport(
                    "imitation_flow",
                    "fails",
                    n_checked,
                    _witness(x, strategy=i, max_out=float(rho[i].max()), max_in=float(rho[:, i].max())),
                )
    if n_checked == 0:
        return ConditionReport("imitation_flow", "inconclusive", 0)
    return ConditionReport("imitation_flow", "holds", n_checked)


def lyapunov_distance(x, params: HypnodiskParams, twin_groups: Sequence[Sequence[int]] | None = None) -> float:
    """Euclidean distance of the (optionally twin-aggregated) state to
    the game's interior equilibrium; the cycling region is
    inner_radius <= W <= outer_radius."""
    return distance_to_center(x, params.center, groups=twin_groups)


@dataclass(frozen=True)
class TwinRatioSeries:
    times: np.ndarray
    ratios: np.ndarray
    valid: np.ndarray
    monotone_toward_one: bool
    terminal_gap: float


def twin_ratio_series(traj: Trajectory, i: int, j: int) -> TwinRatioSeries:
    """x_i(t)/x_j(t) along a trajectory, with a verdict on whether the
    ratio moves monotonically toward 1 (slack 1e-6); samples with
    x_j < 1e-13 are flagged invalid rather than divided through."""
    xi = traj.states[:, i]
    xj = traj.states[:, j]
    valid = xj >= 1e-13
    ratios = np.full(traj.times.size, np.nan)
    ratios[valid] = xi[valid] / xj[valid]
    r = ratios[valid]
    if r.size >= 2:
        gaps = np.abs(r - 1.0)
        monotone = bool(np.all(np.diff(gaps) <= 1e-6))
    else:
        monotone = True
    terminal = float(abs(r[-1] - 1.0)) if r.size else float("nan")
    return TwinRatioSeries(traj.times, ratios, valid, monotone, terminal)


@dataclass(frozen=True)
class TailStats:
    """Per-strategy extrema and time-weighted mean over the final
    window of a trajectory (the practical stand-in for liminf)."""

    window_fraction: float
    t_start: float
    minimum: np.ndarray
    mean: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        if not (np.all(self.minimum <= self.mean + 1e-12) and np.all(self.mean <= self.maximum + 1e-12)):
            raise ValueError("tail statistics must satisfy min <= mean <= max")


def tail_stats(traj: Trajectory, window_fraction: float = 0.25, min_samples: int = 100) -> TailStats:
    tail = traj.tail(window_fraction)
    if len(tail) < min_samples:
        raise ValueError(f"tail window holds {len(tail)} samples, need >= {min_samples}")
    t, s = tail.times, tail.states
    span = t[-1] - t[0]
    w = np.diff(t)
    mids = 0.5 * (s[:-1] + s[1:])
    mean = (w[:, None] * mids).sum(axis=0) / span
    return TailStats(window_fraction, float(t[0]), s.min(axis=0), mean, s.max(axis=0))


def oscillation_period(times: np.ndarray, series: np.ndarray) -> float | None:
    """Rough period estimate from mean-level upcrossings; None when the
    series does not cross its mean at least three times."""
    level = float(series.mean())
    above = series > level
    ups = np.where(~above[:-1] & above[1:])[0]
    if ups.size < 3:
        return None
    crossing_times = times[ups + 1]
    return float(np.mean(np.diff(crossing_times)))
