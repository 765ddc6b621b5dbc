# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled Monte-Carlo backend: per-sample simulation of the meeting
process with a local splitmix64 stream (reproducible from the seed,
independent of numpy's global state)."""

import numpy as np

cimport numpy as cnp
from libc.stdint cimport uint64_t

cnp.import_array()

DEF FAIR = 0
DEF LIST_SAMPLE = 1
DEF MAJORITY = 2
DEF RETRY_OTHER = 3
DEF CONFIRMATION = 4
DEF UNIFORM = 5


cdef inline uint64_t _next(uint64_t* state) nogil:
    cdef uint64_t z
    state[0] += <uint64_t>0x9E3779B97F4A7C15
    z = state[0]
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t* state) nogil:
    return (_next(state) >> 11) * (1.0 / 9007199254740992.0)


cdef inline int _draw(double* cdf, int n, uint64_t* state) nogil:
    cdef double u = _uniform(state)
    cdef int k = 0
    while k < n - 1 and u >= cdf[k]:
        k += 1
    return k


def mc_selection_counts(int kind,
                        cnp.int64_t[:] m_values,
                        double[:] m_probs,
                        double[:] x,
                        int i,
                        long n_samples,
                        long seed,
                        double fair_weight):
    cdef int n = x.shape[0]
    cdef int n_m = m_values.shape[0]
    cdef cnp.ndarray[cnp.int64_t, ndim=1] counts = np.zeros(n, dtype=np.int64)
    cdef cnp.int64_t[:] cv = counts
    cdef double[64] cdf
    cdef double[16] mcdf
    cdef int[64] c
    cdef int k, j, m, sel, best, ties, trial, dist
    cdef long s
    cdef double acc, u
    cdef uint64_t state = <uint64_t>seed ^ <uint64_t>0x6A09E667F3BCC909

    if n > 64:
        raise ValueError("kernel supports at most 64 strategies")
    if n_m > 16:
        raise ValueError("kernel supports at most 16 support points for m")

    acc = 0.0
    for k in range(n):
        acc += x[k]
        cdf[k] = acc
    acc = 0.0
    for k in range(n_m):
        acc += m_probs[k]
        mcdf[k] = acc

    with nogil:
        for s in range(n_samples):
            if fair_weight > 0.0 and kind != FAIR:
                if _uniform(&state) < fair_weight:
                    cv[_draw(cdf, n, &state)] += 1
                    continue
            if kind == FAIR:
                cv[_draw(cdf, n, &state)] += 1
                continue
            if kind == UNIFORM:
                cv[<int>(_uniform(&state) * n) % n] += 1
                continue

            if n_m == 1:
                m = <int>m_values[0]
            else:
                k = 0
                u = _uniform(&state)
                while k < n_m - 1 and u >= mcdf[k]:
                    k += 1
                m = <int>m_values[k]

            if kind == RETRY_OTHER:
                for trial in range(m):
                    sel = _draw(cdf, n, &state)
                    if sel != i:
                        cv[sel] += 1
                        break
                continue

            if kind == CONFIRMATION:
                sel = -1
                for trial in range(m):
                    j = _draw(cdf, n, &state)
                    if j == i:
                        sel = -2
                    elif sel != -2 and _uniform(&state) * (trial + 1) < 1.0:
                        # reservoir pick among the agents met so far
                        sel = j
                if sel >= 0:
                    cv[sel] += 1
                continue

            # list_sample / majority work off the draw counts
            for k in range(n):
                c[k] = 0
            for trial in range(m):
                c[_draw(cdf, n, &state)] += 1

            if kind == LIST_SAMPLE:
                dist = 0
                for k in range(n):
                    if c[k] > 0:
                        dist += 1
                j = <int>(_uniform(&state) * dist)
                sel = -1
                for k in range(n):
                    if c[k] > 0:
                        if j == 0:
                            sel = k
                            break
                        j -= 1
                cv[sel] += 1
            else:  # MAJORITY
                best = 0
                for k in range(n):
                    if c[k] > best:
                        best = c[k]
                ties = 0
                for k in range(n):
                    if c[k] == best:
                        ties += 1
                j = <int>(_uniform(&state) * ties)
                sel = -1
                for k in range(n):
                    if c[k] == best:
                        if j == 0:
                            sel = k
                            break
                        j -= 1
                cv[sel] += 1
    return counts
