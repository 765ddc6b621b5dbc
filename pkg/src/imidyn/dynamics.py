"""Vector fields on the simplex: the mother equation applied to a
revision protocol, the classical closed-form dynamics it specializes to,
and the asymptotic-share curve of the constant two-strategy game."""
from __future__ import annotations

from typing import Callable

import numpy as np

from .core import validate_state
from .games import PayoffFunction
from .protocols import (
    AdoptionRule,
    ProtocolError,
    RevisionProtocol,
    SelectionRule,
    adoption_matrix,
    lambda_factors,
    resolve_baseline,
    selection_matrix,
    switch_rates,
)


class VectorField:
    """dx/dt = V(x).  Output always sums to zero (simplex tangency)."""

    def __init__(self, arity: int, fn: Callable[[np.ndarray], np.ndarray], name: str = ""):
        self.arity = int(arity)
        self._fn = fn
        self.name = name

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.arity,):
            raise ValueError(f"state arity {x.shape} fed to field of arity {self.arity}")
        return np.asarray(self._fn(x), dtype=float)


def mother_rates_to_velocity(x: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Net per-pair flows x_j rho_ji - x_i rho_ij, summed; grouping the
    inflow and outflow of each pair limits cancellation when rho entries
    span many orders of magnitude near the boundary."""
    flow = x[:, None] * rho  # flow[i, j]: mass moving i -> j
    net = flow.T - flow
    return net.sum(axis=1)


def mother_field(proto: RevisionProtocol, game: PayoffFunction) -> VectorField:
    """Assemble dx_i/dt = sum_j x_j rho_ji - x_i sum_j rho_ij."""
    adoption = resolve_baseline(proto.adoption, game)
    resolved = RevisionProtocol(proto.selection, adoption)

    def fn(x):
        x = validate_state(x, tol=1e-6)
        return mother_rates_to_velocity(x, switch_rates(resolved, game, x))

    return VectorField(game.arity, fn, name="mother")


def replicator_field(game: PayoffFunction) -> VectorField:
    def fn(x):
        f = game(x)
        return x * (f - x @ f)

    return VectorField(game.arity, fn, name="replicator")


def smith_field(game: PayoffFunction) -> VectorField:
    """Pairwise-comparison dynamics over the full strategy list (the
    conventional scaling, i.e. without the 1/N selection factor)."""

    def fn(x):
        f = game(x)
        gain = np.maximum(f[:, None] - f[None, :], 0.0)  # gain[i, j] = [F_i - F_j]_+
        return gain @ x - x * gain.T.sum(axis=1)

    return VectorField(game.arity, fn, name="smith")


def bnn_field(game: PayoffFunction) -> VectorField:
    def fn(x):
        f = game(x)
        excess = np.maximum(f - x @ f, 0.0)
        return excess - x * excess.sum()

    return VectorField(game.arity, fn, name="bnn")


def two_strategy_h(proto: RevisionProtocol, game: PayoffFunction, x) -> float:
    """The scalar drive of a two-strategy two-step protocol:
    dx_1/dt = x_1 (1 - x_1) h with h = lambda_21 r_21 - lambda_12 r_12."""
    x = validate_state(x)
    if x.size != 2 or game.arity != 2:
        raise ProtocolError("h is defined for two-strategy games only")
    if not proto.selection.imitative:
        raise ProtocolError("h is defined for imitative (two-step) protocols")
    adoption = resolve_baseline(proto.adoption, game)
    f_vals = game(x)
    r = adoption_matrix(adoption, f_vals, x)
    lam_from_2 = lambda_factors(proto.selection, 1, x)  # lambda_21 multiplies x_1
    lam_from_1 = lambda_factors(proto.selection, 0, x)
    return float(lam_from_2[0] * r[1, 0] - lam_from_1[1] * r[0, 1])


# ---------------------------------------------------------------------------
# asymptotic share of the dominated strategy (constant-payoff game,
# retry-the-meeting selection with at most m trials, success adoption)

def _share_curve(x2: float, m: int) -> float:
    """Payoff ratio u2/u1 that makes x2 stationary."""
    x1 = 1.0 - x2
    return x2 * (1.0 - x2**m) / (x1 * (1.0 - x1**m))


def asymptotic_share(m: int, ratio: float) -> float:
    """Long-run frequency of the weaker strategy: 0 below the survival
    threshold ratio = 1/m, otherwise the root of the stationarity curve
    in (0, 1/2], located by bisection to 1e-12."""
    if m < 1 or int(m) != m:
        raise ValueError("m must be a positive integer")
    if not 0.0 < ratio <= 1.0:
        raise ValueError("payoff ratio must lie in (0, 1]")
    m = int(m)
    if ratio <= 1.0 / m:
        return 0.0
    # the paper asserts but does not prove uniqueness: check monotonicity
    grid = np.linspace(1e-6, 0.5, 101)
    vals = np.array([_share_curve(v, m) for v in grid])
    if np.any(np.diff(vals) <= 0.0):
        raise RuntimeError(f"stationarity curve not monotone for m={m}")
    lo, hi = 1e-15, 0.5
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _share_curve(mid, m) < ratio:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return 0.5 * (lo + hi)


FIELD_KINDS = ("mother", "replicator", "smith", "bnn")


def build_field(kind: str, game: PayoffFunction, proto: RevisionProtocol | None = None) -> VectorField:
    if kind == "mother":
        if proto is None:
            raise ProtocolError("mother field needs a revision protocol")
        return mother_field(proto, game)
    if kind == "replicator":
        return replicator_field(game)
    if kind == "smith":
        return smith_field(game)
    if kind == "bnn":
        return bnn_field(game)
    raise ProtocolError(f"unknown field kind '{kind}'")
