"""Two-step revision protocols: selection rules (who you consider
imitating), adoption rules (whether you switch), and their composition
into switch rates.

Selection probabilities for the sample-m-agents rules (``list_sample``,
``majority``) are computed by exact enumeration over multinomial draws;
`selection_prob_mc` is the independent Monte-Carlo oracle that literally
simulates the meeting process.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Mapping

import numpy as np

from ._kernels import mc_selection_counts
from .core import barycenter, validate_state
from .games import PayoffFunction

SELECTION_KINDS = ("fair", "list_sample", "majority", "retry_other", "confirmation", "uniform")
#: selection kinds with p_ij = lambda * x_j (zero probability of selecting an unplayed strategy)
IMITATIVE_KINDS = ("fair", "list_sample", "majority", "retry_other", "confirmation")
ADOPTION_KINDS = ("success", "dissatisfaction", "pairwise", "above_average", "below_average", "product")

#: refuse exact enumeration beyond this (combinatorial blowup); use the MC oracle instead
ENUM_MAX_M = 12
ENUM_MAX_N = 8

_KIND_IDS = {k: i for i, k in enumerate(SELECTION_KINDS)}


class ProtocolError(ValueError):
    """Ill-formed rule or a rule evaluated outside its domain."""


def _normalize_m(kind: str, m) -> tuple[tuple[int, ...], tuple[float, ...]]:
    if kind in ("fair", "uniform"):
        return (), ()
    if m is None:
        raise ProtocolError(f"selection kind '{kind}' needs the sample size m")
    if isinstance(m, (int, np.integer)):
        table: Mapping[int, float] = {int(m): 1.0}
    elif isinstance(m, Mapping):
        table = m
    else:
        raise ProtocolError("m must be an int or a {m: probability} table")
    values = tuple(sorted(int(k) for k in table))
    probs = tuple(float(table[k]) for k in sorted(table))
    if any(v < 1 for v in values):
        raise ProtocolError("sample sizes must be >= 1")
    if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-12:
        raise ProtocolError("m-distribution probabilities must be >= 0 and sum to 1")
    return values, probs


@dataclass(frozen=True)
class SelectionRule:
    """First step of a two-step protocol.

    ``fair_weight`` mixes the rule with the fair first step:
    p = (1 - w) * p_rule + w * x_j.  This is an extrapolation knob; the
    built-in rules themselves correspond to w = 0.
    """

    kind: str
    m: int | Mapping[int, float] | None = None
    fair_weight: float = 0.0
    m_values: tuple[int, ...] = field(init=False)
    m_probs: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if self.kind not in SELECTION_KINDS:
            raise ProtocolError(f"unknown selection kind '{self.kind}'")
        if not 0.0 <= self.fair_weight <= 1.0:
            raise ProtocolError("fair_weight must be in [0, 1]")
        values, probs = _normalize_m(self.kind, self.m)
        object.__setattr__(self, "m_values", values)
        object.__setattr__(self, "m_probs", probs)
        object.__setattr__(self, "m", dict(zip(values, probs)) if values else None)

    @property
    def imitative(self) -> bool:
        return self.kind in IMITATIVE_KINDS

    @property
    def depends_on_revising_agent(self) -> bool:
        return self.kind in ("retry_other", "confirmation")


@dataclass(frozen=True)
class AdoptionRule:
    """Second step: switch probability factor r_ij.

    ``K`` is the positivity baseline for ``success`` / ``dissatisfaction``;
    leave it ``None`` to have it resolved from a sampled payoff bound via
    `resolve_baseline`.
    """

    kind: str
    K: float | None = None
    f: Callable[[float], float] | None = None
    g: Callable[[float], float] | None = None

    def __post_init__(self):
        if self.kind not in ADOPTION_KINDS:
            raise ProtocolError(f"unknown adoption kind '{self.kind}'")
        if self.kind == "product" and (self.f is None or self.g is None):
            raise ProtocolError("product adoption needs both scalar maps f and g")


@dataclass(frozen=True)
class RevisionProtocol:
    selection: SelectionRule
    adoption: AdoptionRule


# ---------------------------------------------------------------------------
# exact enumeration over multinomial draws

@lru_cache(maxsize=None)
def _compositions(m: int, n: int) -> tuple[tuple[int, ...], ...]:
    """All vectors of n nonnegative ints summing to m."""
    if n == 1:
        return ((m,),)
    out = []
    for head in range(m + 1):
        for rest in _compositions(m - head, n - 1):
            out.append((head,) + rest)
    return tuple(out)


@lru_cache(maxsize=None)
def _enum_tables(m: int, n: int, kind: str):
    """Per-composition multinomial coefficients and selection weights.

    Weight[c, j] is the probability that strategy j is selected given the
    draw has counts c: uniform over the distinct strategies present
    (list_sample) or uniform over the tied most-frequent strategies
    (majority).
    """
    comps = np.array(_compositions(m, n), dtype=np.int64)
    coefs = np.array(
        [math.factorial(m) // math.prod(math.factorial(int(c)) for c in row) for row in comps],
        dtype=float,
    )
    if kind == "list_sample":
        present = comps > 0
        weights = present / present.sum(axis=1, keepdims=True)
    elif kind == "majority":
        top = comps.max(axis=1, keepdims=True)
        ties = comps == top
        weights = ties / ties.sum(axis=1, keepdims=True)
    else:
        raise ProtocolError(f"no enumeration table for kind '{kind}'")
    return comps, coefs, weights


def _enumerated_selection(kind: str, m: int, x: np.ndarray) -> np.ndarray:
    n = x.size
    if m > ENUM_MAX_M or n > ENUM_MAX_N:
        raise ProtocolError(
            f"exact enumeration refused for m={m}, N={n} "
            f"(limits m<={ENUM_MAX_M}, N<={ENUM_MAX_N}); use selection_prob_mc"
        )
    comps, coefs, weights = _enum_tables(m, n, kind)
    with np.errstate(divide="ignore"):
        logs = np.where(x > 0.0, np.log(x), -np.inf)
    # compositions that draw an extinct strategy have probability zero;
    # handle them separately so 0 * -inf cannot poison the matmul
    extinct = np.isneginf(logs)
    logw = comps @ np.where(extinct, 0.0, logs)
    dead = (comps @ extinct.astype(float)) > 0.0
    draw_probs = coefs * np.where(dead, 0.0, np.exp(np.where(dead, 0.0, logw)))
    terms = draw_probs[:, None] * weights
    # compensated per-strategy sums: probabilities near 1e-12 appear for large m
    return np.array([math.fsum(terms[:, j]) for j in range(n)])


def _geometric_lambda(xi: float, m_values, m_probs) -> float:
    """lambda(x_i) = E_m[1 + x_i + ... + x_i^(m-1)] (retry-the-meeting rule)."""
    return math.fsum(p * math.fsum(xi**k for k in range(m)) for m, p in zip(m_values, m_probs))


def _confirmation_lambda(xi: float, m_values, m_probs) -> float:
    """lambda(x_i) = E_m[(1 - x_i)^(m-1)] (confirmation-bias rule)."""
    return math.fsum(p * (1.0 - xi) ** (m - 1) for m, p in zip(m_values, m_probs))


def _base_selection(rule: SelectionRule, x: np.ndarray) -> np.ndarray:
    """Selection probabilities over all strategies for rules whose first
    step does not depend on the revising agent's own strategy."""
    if rule.kind == "fair":
        base = x.copy()
    elif rule.kind == "uniform":
        base = np.full(x.size, 1.0 / x.size)
    elif rule.kind in ("list_sample", "majority"):
        base = np.zeros(x.size)
        for m, p in zip(rule.m_values, rule.m_probs):
            base += p * _enumerated_selection(rule.kind, m, x)
    else:
        raise ProtocolError(f"selection kind '{rule.kind}' depends on the revising agent")
    if rule.fair_weight:
        base = (1.0 - rule.fair_weight) * base + rule.fair_weight * x
    return base


def selection_prob(rule: SelectionRule, i: int, x) -> np.ndarray:
    """Exact selection probabilities p_ij for a revising ``i``-strategist.

    Entry ``i`` of the result is 0; the deficit 1 - sum is the
    probability of keeping the current strategy.
    """
    x = validate_state(x)
    n = x.size
    if not 0 <= i < n:
        raise ProtocolError(f"strategy index {i} out of range for arity {n}")
    if rule.depends_on_revising_agent:
        if rule.kind == "retry_other":
            lam = _geometric_lambda(float(x[i]), rule.m_values, rule.m_probs)
        else:
            lam = _confirmation_lambda(float(x[i]), rule.m_values, rule.m_probs)
        p = lam * x
        if rule.fair_weight:
            p = (1.0 - rule.fair_weight) * p + rule.fair_weight * x
    else:
        p = _base_selection(rule, x)
    p = p.copy()
    p[i] = 0.0
    return p


def selection_prob_mc(
    rule: SelectionRule, i: int, x, samples: int, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Monte-Carlo oracle: literally simulate the meeting process
    ``samples`` times and tally which strategy gets selected.

    Returns (probability estimates, binomial standard errors); entry
    ``i`` counts as "keep own strategy" and is reported as 0.
    """
    if samples < 1:
        raise ProtocolError("samples must be >= 1")
    x = validate_state(x)
    if not 0 <= i < x.size:
        raise ProtocolError(f"strategy index {i} out of range for arity {x.size}")
    counts = mc_selection_counts(
        _KIND_IDS[rule.kind],
        np.array(rule.m_values or (1,), dtype=np.int64),
        np.array(rule.m_probs or (1.0,), dtype=float),
        np.asarray(x, dtype=float),
        int(i),
        int(samples),
        int(seed),
        float(rule.fair_weight),
    )
    counts = np.asarray(counts, dtype=float)
    counts[i] = 0.0
    p = counts / samples
    se = np.sqrt(p * (1.0 - p) / samples)
    return p, se


def conditional_selection_given_event(l: int, q: int, m_tilde: int, y_i: float) -> float:
    """Probability that strategy i is selected, conditional on the event
    that l of the met agents play neither twin (spread over q distinct
    strategies) and m_tilde play one of the twins, with i's conditional
    frequency y_i among the twins."""
    if not 0.0 <= y_i <= 1.0:
        raise ProtocolError("y_i must be in [0, 1]")
    if q < 0 or l < q or m_tilde < 1:
        raise ProtocolError("need 0 <= q <= l and m_tilde >= 1")
    yj = 1.0 - y_i
    return y_i**m_tilde / (q + 1) + (1.0 - y_i**m_tilde - yj**m_tilde) / (q + 2)


# ---------------------------------------------------------------------------
# adoption

_BASELINE_SAMPLE = 1000


def resolve_baseline(rule: AdoptionRule, game: PayoffFunction, seed: int = 0) -> AdoptionRule:
    """Fill in the positivity constant K = 1 + max |F_i(x)| over a fixed
    deterministic sample of states, when the rule left it unspecified."""
    if rule.kind not in ("success", "dissatisfaction") or rule.K is not None:
        return rule
    n = game.arity
    matrix = getattr(game, "matrix", None)
    if matrix is not None and np.asarray(matrix).shape == (n, n):
        # linear payoffs attain their extrema at the simplex vertices
        bound = float(np.max(np.abs(matrix)))
    elif game.kind == "constant":
        bound = float(np.max(np.abs(game(barycenter(n)))))
    else:
        rng = np.random.default_rng(seed)
        states = np.vstack(
            [np.eye(n), barycenter(n)[None, :], rng.dirichlet(np.ones(n), size=_BASELINE_SAMPLE)]
        )
        bound = max(float(np.max(np.abs(game(validate_state(s, tol=1e-9))))) for s in states)
    return AdoptionRule(kind=rule.kind, K=1.0 + bound)


def adoption_matrix(rule: AdoptionRule, f_vals: np.ndarray, x: np.ndarray) -> np.ndarray:
    """All conditional adoption rates r_ij at once (row: current
    strategy, column: candidate)."""
    f_vals = np.asarray(f_vals, dtype=float)
    n = f_vals.size
    if rule.kind == "success":
        if rule.K is None:
            raise ProtocolError("success adoption needs K (use resolve_baseline)")
        col = rule.K + f_vals
        if np.min(col) <= 0.0:
            raise ProtocolError(f"K={rule.K} violates K + F_j > 0 (min {np.min(col)})")
        return np.tile(col, (n, 1))
    if rule.kind == "dissatisfaction":
        if rule.K is None:
            raise ProtocolError("dissatisfaction adoption needs K (use resolve_baseline)")
        row = rule.K - f_vals
        if np.min(row) <= 0.0:
            raise ProtocolError(f"K={rule.K} violates K - F_i > 0 (min {np.min(row)})")
        return np.tile(row[:, None], (1, n))
    if rule.kind == "pairwise":
        return np.maximum(f_vals[None, :] - f_vals[:, None], 0.0)
    fbar = float(np.asarray(x, dtype=float) @ f_vals)
    if rule.kind == "above_average":
        return np.tile(np.maximum(f_vals - fbar, 0.0), (n, 1))
    if rule.kind == "below_average":
        return np.tile(np.maximum(fbar - f_vals, 0.0)[:, None], (1, n))
    # product(f, g)
    fi = np.array([rule.f(v) for v in f_vals])
    gj = np.array([rule.g(v) for v in f_vals])
    if np.min(fi) < 0.0 or np.min(gj) < 0.0:
        raise ProtocolError("product adoption maps must be nonnegative")
    return fi[:, None] * gj[None, :]


def adoption_rate(rule: AdoptionRule, i: int, j: int, f_vals, x) -> float:
    """Single conditional adoption rate r_ij >= 0."""
    f_vals = np.asarray(f_vals, dtype=float)
    return float(adoption_matrix(rule, f_vals, np.asarray(x, dtype=float))[i, j])


def selection_matrix(rule: SelectionRule, x: np.ndarray) -> np.ndarray:
    """p_ij for every ordered pair, diagonal zeroed."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if rule.depends_on_revising_agent:
        if rule.kind == "retry_other":
            lam = np.array([_geometric_lambda(float(v), rule.m_values, rule.m_probs) for v in x])
        else:
            lam = np.array([_confirmation_lambda(float(v), rule.m_values, rule.m_probs) for v in x])
        p = lam[:, None] * x[None, :]
        if rule.fair_weight:
            p = (1.0 - rule.fair_weight) * p + rule.fair_weight * x[None, :]
    else:
        p = np.tile(_base_selection(rule, x), (n, 1))
    np.fill_diagonal(p, 0.0)
    return p


def switch_rates(proto: RevisionProtocol, game: PayoffFunction, x) -> np.ndarray:
    """Compose the protocol into the switch-rate matrix
    rho_ij = p_ij * r_ij (diagonal zero)."""
    x = validate_state(x)
    if x.size != game.arity:
        raise ProtocolError(f"state arity {x.size} does not match game arity {game.arity}")
    adoption = resolve_baseline(proto.adoption, game)
    f_vals = game(x)
    rho = selection_matrix(proto.selection, x) * adoption_matrix(adoption, f_vals, x)
    np.fill_diagonal(rho, 0.0)
    return rho


def lambda_factors(rule: SelectionRule, i: int, x) -> np.ndarray:
    """Selection-rate multipliers lambda_ij = p_ij / x_j.

    Entries that are undefined (x_j = 0 under an enumerated rule, or
    j = i) are reported as NaN rather than fabricated.  For
    ``retry_other`` the closed form lambda(x_i) is reported even at
    x_i = 1, where every p_ij vanishes.
    """
    if not rule.imitative:
        raise ProtocolError(f"lambda factors are defined for imitative kinds, not '{rule.kind}'")
    x = validate_state(x)
    n = x.size
    if rule.kind == "fair":
        lam = np.ones(n)
    elif rule.kind == "retry_other":
        lam = np.full(n, _geometric_lambda(float(x[i]), rule.m_values, rule.m_probs))
    elif rule.kind == "confirmation":
        lam = np.full(n, _confirmation_lambda(float(x[i]), rule.m_values, rule.m_probs))
    else:
        p = _base_selection(rule, x)
        with np.errstate(divide="ignore", invalid="ignore"):
            lam = np.where(x > 0.0, p / np.where(x > 0.0, x, 1.0), np.nan)
    if rule.fair_weight and rule.kind in ("fair", "retry_other", "confirmation"):
        lam = (1.0 - rule.fair_weight) * lam + rule.fair_weight
    lam = lam.copy()
    lam[i] = np.nan
    return lam
