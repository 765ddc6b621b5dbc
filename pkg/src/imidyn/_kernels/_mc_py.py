"""Pure-numpy Monte-Carlo backend.

Simulates the meeting process at the level of per-sample draw counts
(the met agents are i.i.d., so the multinomial counts carry everything
the selection rules look at), vectorized over chunks of samples.
"""
from __future__ import annotations

import numpy as np

_CHUNK = 1 << 18

# selection-rule ids shared with the Cython backend
FAIR, LIST_SAMPLE, MAJORITY, RETRY_OTHER, CONFIRMATION, UNIFORM = range(6)


def _pick_among(mask: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Per row, pick uniformly among the True columns (rows must have at
    least one).  Returns column indices."""
    avail = mask.sum(axis=1)
    rank = (rng.random(mask.shape[0]) * avail).astype(np.int64) + 1
    cum = mask.cumsum(axis=1)
    return np.argmax((cum == rank[:, None]) & mask, axis=1)


def _counts_rule_chunk(kind, m, x, i, size, rng, out):
    n = x.size
    if kind == LIST_SAMPLE:
        c = rng.multinomial(m, x, size=size)
        sel = _pick_among(c > 0, rng)
        out += np.bincount(sel, minlength=n)
    elif kind == MAJORITY:
        c = rng.multinomial(m, x, size=size)
        sel = _pick_among(c == c.max(axis=1, keepdims=True), rng)
        out += np.bincount(sel, minlength=n)
    elif kind == RETRY_OTHER:
        draws = rng.choice(n, size=(size, m), p=x)
        other = draws != i
        has = other.any(axis=1)
        first = np.argmax(other, axis=1)
        sel = draws[np.arange(size), first][has]
        out += np.bincount(sel, minlength=n)
    elif kind == CONFIRMATION:
        draws = rng.choice(n, size=(size, m), p=x)
        keep = (draws == i).any(axis=1)
        col = (rng.random(size) * m).astype(np.int64)
        sel = draws[np.arange(size), col][~keep]
        out += np.bincount(sel, minlength=n)
    else:
        raise ValueError(f"unknown kernel rule id {kind}")


def mc_selection_counts(kind, m_values, m_probs, x, i, n_samples, seed, fair_weight):
    """Tally of the strategy selected in each of ``n_samples`` simulated
    revisions (selections of nothing / the own strategy simply do not
    land in the returned counts for j != i)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    rng = np.random.default_rng(seed)
    counts = np.zeros(n, dtype=np.int64)

    remaining = int(n_samples)
    if fair_weight > 0.0 and kind != FAIR:
        n_fair = int(rng.binomial(n_samples, fair_weight))
        counts += rng.multinomial(n_fair, x)
        remaining -= n_fair

    if kind == FAIR:
        counts += rng.multinomial(remaining, x)
        return counts
    if kind == UNIFORM:
        counts += rng.multinomial(remaining, np.full(n, 1.0 / n))
        return counts

    m_values = np.asarray(m_values, dtype=np.int64)
    m_probs = np.asarray(m_probs, dtype=float)
    while remaining > 0:
        size = min(_CHUNK, remaining)
        remaining -= size
        if m_values.size == 1:
            _counts_rule_chunk(kind, int(m_values[0]), x, i, size, rng, counts)
        else:
            per_m = rng.multinomial(size, m_probs)
            for m, cnt in zip(m_values, per_m):
                if cnt:
                    _counts_rule_chunk(kind, int(m), x, i, int(cnt), rng, counts)
    return counts
