"""Kernel backend selection.

The hot numeric loops (closed-loop rollouts, value integrals, neighbor
ratios) exist twice: a numba @njit implementation and a vectorised pure
numpy fallback. The env var ``ATTAINSET_BACKEND`` picks one:

* unset / ``auto``: numba if importable, numpy otherwise
* ``numba``: require numba (warn and fall back if missing)
* ``numpy``: force the pure numpy path

Both paths implement identical algorithms; results agree to ~1e-12
relative (float summation order differs). Bit-level reproducibility is
guaranteed per backend, not across backends.
"""

import os
import warnings

ENV_FLAG = "ATTAINSET_BACKEND"


def _resolve() -> str:
    requested = os.environ.get(ENV_FLAG, "auto").strip().lower()
    if requested not in ("auto", "numba", "numpy", ""):
        warnings.warn(
            f"{ENV_FLAG}={requested!r} not recognised; using auto", stacklevel=2
        )
        requested = "auto"
    if requested == "numpy":
        return "numpy"
    try:
        import numba  # noqa: F401
    except ImportError:
        if requested == "numba":
            warnings.warn(
                "numba backend requested but numba is not importable; "
                "falling back to numpy kernels",
                stacklevel=2,
            )
        return "numpy"
    return "numba"


BACKEND = _resolve()
USING_NUMBA = BACKEND == "numba"
