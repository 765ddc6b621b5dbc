"""Monte-Carlo meeting-process kernels.

The sampler is the hot inner loop of the oracle suite (hundreds of
millions of simulated meetings), so it ships as a compiled Cython
extension with a vectorized pure-numpy fallback.  The backend is picked
at import time; set ``IMIDYN_KERNELS=python`` or ``=cython`` to force
one.  ``benchmarks/bench_kernels.py`` compares the two.
"""
import os

_requested = os.environ.get("IMIDYN_KERNELS", "auto")

if _requested == "python":
    from ._mc_py import mc_selection_counts

    BACKEND = "python"
elif _requested == "cython":
    from ._mc_cy import mc_selection_counts

    BACKEND = "cython"
else:
    try:
        from ._mc_cy import mc_selection_counts

        BACKEND = "cython"
    except ImportError:
        from ._mc_py import mc_selection_counts

        BACKEND = "python"

__all__ = ["mc_selection_counts", "BACKEND"]
