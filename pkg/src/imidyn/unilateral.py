"""Three focal strategies against a controlled two-action opponent.

The focal payoff rows against (left, right) are (1, 0), (0, 1) and
(-eps, 1-eps): strategy 3 duplicates strategy 2 minus a margin eps, so
it is strictly dominated for eps > 0 and an exact twin at eps = 0.  The
opponent is either a threshold switcher keyed on x_1 or a smooth
periodic schedule y(t)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .analysis import ConditionReport, _witness
from .core import validate_state
from .dynamics import VectorField, mother_rates_to_velocity
from .games import PayoffFunction
from .integrate import Controller, IntegratorConfig, Trajectory, integrate, integrate_controlled
from .protocols import (
    AdoptionRule,
    RevisionProtocol,
    adoption_matrix,
    selection_matrix,
)


@dataclass(frozen=True)
class UnilateralGame:
    """3x2 payoff table for the focal population; a mixed opponent
    playing left with probability y yields F = y * col_L + (1-y) * col_R."""

    eps: float = 0.0

    def __post_init__(self):
        if self.eps < 0.0:
            raise ValueError("domination margin eps must be >= 0")

    @property
    def matrix(self) -> np.ndarray:
        e = self.eps
        return np.array([[1.0, 0.0], [0.0, 1.0], [-e, 1.0 - e]])

    def payoffs(self, y: float) -> np.ndarray:
        if not 0.0 <= y <= 1.0:
            raise ValueError("opponent mix y must be in [0, 1]")
        return self.matrix @ np.array([y, 1.0 - y])

    def frozen(self, y: float) -> PayoffFunction:
        """The induced 3-strategy game at a fixed opponent mix."""
        f = self.payoffs(y)
        return PayoffFunction(3, lambda x: f.copy(), kind="unilateral")


def _resolve_adoption(rule: AdoptionRule, game: UnilateralGame) -> AdoptionRule:
    if rule.kind in ("success", "dissatisfaction") and rule.K is None:
        bound = float(np.max(np.abs(game.matrix)))
        return AdoptionRule(kind=rule.kind, K=1.0 + bound)
    return rule


def _velocity(proto: RevisionProtocol, adoption: AdoptionRule, f_vals: np.ndarray, x: np.ndarray) -> np.ndarray:
    rho = selection_matrix(proto.selection, x) * adoption_matrix(adoption, f_vals, x)
    np.fill_diagonal(rho, 0.0)
    return mother_rates_to_velocity(x, rho)


def fixed_control_field(proto: RevisionProtocol, game: UnilateralGame, y: float) -> VectorField:
    """Focal dynamics when the opponent mix is held at y."""
    adoption = _resolve_adoption(proto.adoption, game)
    f_vals = game.payoffs(y)

    def fn(x):
        x = validate_state(x, tol=1e-6)
        return _velocity(proto, adoption, f_vals, x)

    return VectorField(3, fn, name=f"unilateral_y={y:g}")


@dataclass(frozen=True)
class ThresholdController(Controller):
    """Play left until x_1 reaches x_max, then right until x_1 falls
    back to x_min; one-sided hysteresis, so no chattering at either
    threshold."""

    x_min: float = 0.3
    x_max: float = 0.7

    def __post_init__(self):
        if not 0.0 < self.x_min < self.x_max < 1.0:
            raise ValueError("need 0 < x_min < x_max < 1")

    @property
    def initial(self) -> str:
        return "L"

    def __call__(self, t, x, control):
        if control == "L" and x[0] >= self.x_max:
            return "R"
        if control == "R" and x[0] <= self.x_min:
            return "L"
        return control


@dataclass(frozen=True)
class SmoothPeriodicOpponent:
    """y(t) = (1 + root(sin(pi t)))/2 with the signed odd root
    sign(s) |s|^(1/exponent_index); period 2, range [0, 1]."""

    exponent_index: int = 9

    def __post_init__(self):
        if self.exponent_index < 1 or self.exponent_index % 2 == 0:
            raise ValueError("exponent index must be a positive odd integer")

    def __call__(self, t: float) -> float:
        s = math.sin(math.pi * t)
        root = math.copysign(abs(s) ** (1.0 / self.exponent_index), s)
        return 0.5 * (1.0 + root)


def run_unilateral(
    proto: RevisionProtocol,
    eps: float,
    ctrl,
    x0,
    cfg: IntegratorConfig,
) -> Trajectory:
    """Integrate the focal population against the opponent controller
    (`ThresholdController` for the switched system, with switch events
    recorded, or `SmoothPeriodicOpponent` for continuous forcing)."""
    game = UnilateralGame(eps)
    if isinstance(ctrl, SmoothPeriodicOpponent):
        adoption = _resolve_adoption(proto.adoption, game)

        def forced(t, x):
            x = validate_state(x, tol=1e-6)
            return _velocity(proto, adoption, game.payoffs(ctrl(t)), x)

        forced.time_dependent = True
        return integrate(forced, x0, cfg)
    if isinstance(ctrl, Controller):
        fields = {"L": fixed_control_field(proto, game, 1.0), "R": fixed_control_field(proto, game, 0.0)}
        return integrate_controlled(lambda symbol: fields[symbol], ctrl, x0, cfg)
    raise TypeError(f"unsupported opponent controller {type(ctrl).__name__}")


def verify_A_assumptions(proto: RevisionProtocol, eps: float, states: Sequence) -> ConditionReport:
    """Check the growth-rate sign pattern the oscillation argument
    needs, on interior states with 0 < x_1 < 1 and x_3 < x_2:
    (A2)  g_1 > 0 under left and g_1 < 0 under right;
    (A3)  g_3 >= g_2 under left and g_3 > g_2 under right;
    (A3') g_3 > g_2 under left and g_3 >= g_2 under right."""
    game = UnilateralGame(eps)
    field_l = fixed_control_field(proto, game, 1.0)
    field_r = fixed_control_field(proto, game, 0.0)
    a2 = a3 = a3p = True
    n_checked = 0
    first_bad = None
    for raw in states:
        x = validate_state(raw)
        if x.size != 3 or float(x.min()) <= 0.0 or not x[2] < x[1]:
            continue
        gl = np.asarray(field_l(x)) / x
        gr = np.asarray(field_r(x)) / x
        n_checked += 1
        ok2 = gl[0] > 0.0 and gr[0] < 0.0
        ok3 = gl[2] >= gl[1] - 1e-12 and gr[2] > gr[1]
        ok3p = gl[2] > gl[1] and gr[2] >= gr[1] - 1e-12
        if not (ok2 and (ok3 or ok3p)) and first_bad is None:
            first_bad = _witness(x, growth_left=gl, growth_right=gr)
        a2 &= ok2
        a3 &= ok3
        a3p &= ok3p
    details = {"A2": bool(a2), "A3": bool(a3), "A3prime": bool(a3p)}
    if n_checked == 0:
        return ConditionReport("unilateral_growth_signs", "inconclusive", 0, details=details)
    if a2 and (a3 or a3p):
        return ConditionReport("unilateral_growth_signs", "holds", n_checked, details=details)
    return ConditionReport("unilateral_growth_signs", "fails", n_checked, first_bad, details)
