"""Selects the compiled kernels when built, else the pure-Python ones.

Set ``KWMATCH_PURE_PYTHON=1`` to force the fallback.
"""

import os

if os.environ.get("KWMATCH_PURE_PYTHON"):
    from . import _kernels_py as _impl
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:
        from . import _kernels_py as _impl
        BACKEND = "python"

removal_ranks = _impl.removal_ranks
comparable_pairs = _impl.comparable_pairs
lexical_features = _impl.lexical_features

__all__ = ["BACKEND", "comparable_pairs", "lexical_features", "removal_ranks"]
