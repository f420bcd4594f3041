"""Hot kernels: compiled when available, pure Python otherwise.

Set ``REDLISTSIM_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import race_py

try:
    if os.environ.get("REDLISTSIM_PURE_PYTHON"):
        raise ImportError("pure-python kernels requested")
    from . import race_ext
except ImportError:
    race_ext = None

COMPILED = race_ext is not None
race_counts = race_ext.race_counts if COMPILED else race_py.race_counts

__all__ = ["COMPILED", "race_counts", "race_py", "race_ext"]
