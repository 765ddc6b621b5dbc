"""Payoff functions: matrix games, constant games, the hypnodisk family,
and the twin / feeble-twin transforms."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import aggregate, tangent_projection, validate_state

# orthonormal basis of the tangent plane of the 3-simplex
# (Gram-Schmidt on (1,-1,0) and (1,1,-2))
_E1 = np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
_E2 = np.array([1.0, 1.0, -2.0]) / math.sqrt(6.0)


class GameError(ValueError):
    """Ill-formed payoff function or arity mismatch."""


class PayoffFunction:
    """Map from population states to payoff vectors.

    ``kind`` is one of ``matrix``, ``constant``, ``hypnodisk``, ``derived``.
    Instances are immutable and evaluation is pure.
    """

    def __init__(self, arity: int, fn: Callable[[np.ndarray], np.ndarray], kind: str = "derived"):
        self.arity = int(arity)
        self._fn = fn
        self.kind = kind
        #: indices of an exact-twin pair, when known by construction
        self.twin_pair: tuple[int, int] | None = None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.arity,):
            raise GameError(f"state of arity {x.shape} fed to game of arity {self.arity}")
        return np.asarray(self._fn(x), dtype=float)


class MatrixGame(PayoffFunction):
    """Linear payoffs F(x) = A x."""

    def __init__(self, matrix):
        a = np.array(matrix, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise GameError(f"payoff matrix must be square, got {a.shape}")
        if not np.all(np.isfinite(a)):
            raise GameError("payoff matrix has non-finite entries")
        self.matrix = a
        super().__init__(a.shape[0], lambda x: a @ x, kind="matrix")


def load_matrix_game(source) -> MatrixGame:
    """Load ``{"matrix": [[...]]}`` from a dict, JSON string, or file path."""
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        if text.lstrip().startswith("{"):
            data = json.loads(text)
        else:
            with open(text, "r", encoding="utf-8") as fh:
                data = json.load(fh)
    if "matrix" not in data:
        raise GameError("missing 'matrix' key")
    return MatrixGame(data["matrix"])


@dataclass(frozen=True)
class HypnodiskParams:
    """Center and disk radii of the hypnodisk construction."""

    center: np.ndarray
    inner_radius: float
    outer_radius: float

    def __post_init__(self):
        c = validate_state(self.center)
        object.__setattr__(self, "center", c)
        if c.size != 3:
            raise GameError("hypnodisk center must live on the 3-strategy simplex")
        if c.min() <= 0.0:
            raise GameError("hypnodisk center must be strictly interior")
        r, big_r = self.inner_radius, self.outer_radius
        if not (0.0 < r < big_r < 1.0 / math.sqrt(6.0)):
            raise GameError(f"need 0 < r < R < 1/sqrt(6), got r={r}, R={big_r}")


def hypnodisk_payoff(params: HypnodiskParams, x) -> np.ndarray:
    """Coordination-like payoffs inside the inner disk, anti-coordination
    outside the outer disk, and a norm-preserving rotation of the
    projected field in between (total rotation angle pi across the
    annulus, linear in the distance to the center)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise GameError(f"hypnodisk is a 3-strategy game, got arity {x.shape}")
    u = x - params.center
    d = float(np.linalg.norm(u))
    r, big_r = params.inner_radius, params.outer_radius
    if d <= r:
        return u
    if d >= big_r:
        return -u
    theta = math.pi * (d - r) / (big_r - r)
    a = float(u @ _E1)
    b = float(u @ _E2)
    c, s = math.cos(theta), math.sin(theta)
    return (a * c - b * s) * _E1 + (a * s + b * c) * _E2


def hypnodisk_game(params: HypnodiskParams) -> PayoffFunction:
    game = PayoffFunction(3, lambda x: hypnodisk_payoff(params, x), kind="hypnodisk")
    game.hypnodisk_params = params
    return game


def add_twin(base: PayoffFunction) -> PayoffFunction:
    """Extend a 3-strategy game with an exact twin of strategy 3
    (0-based index 2): F_i(x) = H_i(x1, x2, x3 + x4), F_4 = F_3."""
    if base.arity != 3:
        raise GameError(f"add_twin needs a 3-strategy game, got arity {base.arity}")

    def fn(x):
        h = base(np.array([x[0], x[1], x[2] + x[3]]))
        return np.array([h[0], h[1], h[2], h[2]])

    game = PayoffFunction(4, fn, kind="derived")
    game.twin_pair = (2, 3)
    game.base = base
    return game


def penalize(base: PayoffFunction, strategy: int, eps: float) -> PayoffFunction:
    """Subtract ``eps`` from one strategy's payoff (feeble-twin step)."""
    if not 0 <= strategy < base.arity:
        raise GameError(f"strategy index {strategy} out of range for arity {base.arity}")
    if eps < 0:
        raise GameError("penalty must be >= 0")
    if eps == 0.0:
        return base
    delta = np.zeros(base.arity)
    delta[strategy] = eps
    game = PayoffFunction(base.arity, lambda x: base(x) - delta, kind="derived")
    game.base = base
    game.penalty = (strategy, eps)
    return game


def hypnodisk_feeble_twin(params: HypnodiskParams, eps: float) -> PayoffFunction:
    """Three-step construction: hypnodisk, add a twin of strategy 3,
    penalize the twin by ``eps``."""
    game = penalize(add_twin(hypnodisk_game(params)), 3, eps)
    game.twin_pair = (2, 3)
    game.hypnodisk_params = params
    return game


def rps_feeble_twin(d: float) -> MatrixGame:
    """Rock-Paper-Scissors with a feeble twin of Scissors, domination
    margin ``d``."""
    if d < 0:
        raise GameError("domination margin must be >= 0")
    game = MatrixGame(
        [
            [0.0, -2.0, 1.0, 1.0],
            [1.0, 0.0, -2.0, -2.0],
            [-2.0, 1.0, 0.0, 0.0],
            [-2.0 - d, 1.0 - d, -d, -d],
        ]
    )
    game.twin_pair = (2, 3)
    return game


def constant_two_strategy(u1: float, u2: float) -> PayoffFunction:
    out = np.array([float(u1), float(u2)])
    game = PayoffFunction(2, lambda x: out.copy(), kind="constant")
    if u1 == u2:
        game.twin_pair = (0, 1)
    return game


def constant_game(payoffs) -> PayoffFunction:
    out = np.array(payoffs, dtype=float)
    game = PayoffFunction(out.size, lambda x: out.copy(), kind="constant")
    for i in range(out.size):
        for j in range(i + 1, out.size):
            if out[i] == out[j]:
                game.twin_pair = (i, j)
                return game
    return game


@dataclass(frozen=True)
class DominanceVerdict:
    dominated: bool
    witness: np.ndarray | None = None

    def __bool__(self) -> bool:
        return self.dominated


def _barycentric_grid(n: int, points_per_dim: int) -> np.ndarray:
    k = points_per_dim - 1
    out = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            out.append(prefix + [remaining])
            return
        for v in range(remaining + 1):
            rec(prefix + [v], remaining - v, slots - 1)

    rec([], k, n)
    return np.array(out, dtype=float) / k


def is_strictly_dominated(
    game: PayoffFunction,
    i: int,
    j: int,
    grid_points: int = 21,
    n_samples: int = 1000,
    seed: int = 0,
) -> DominanceVerdict:
    """Check F_i(x) < F_j(x) everywhere.  Matrix games only need the
    simplex vertices (payoff differences are linear); nonlinear games are
    screened on a barycentric grid plus random interior samples."""
    if i == j:
        raise GameError("indices must be distinct")
    n = game.arity
    if isinstance(game, MatrixGame):
        candidates = np.eye(n)
    else:
        rng = np.random.default_rng(seed)
        candidates = np.vstack(
            [_barycentric_grid(n, grid_points), rng.dirichlet(np.ones(n), size=n_samples)]
        )
    for x in candidates:
        f = game(validate_state(x, tol=1e-6))
        if f[i] >= f[j]:
            return DominanceVerdict(False, witness=np.asarray(x))
    return DominanceVerdict(True)
