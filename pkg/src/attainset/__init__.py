"""attainset: simulate control-affine systems driven by wide two-layer
neural policies and measure the intrinsic dimension of the states they
attain."""

from ._backend import BACKEND, USING_NUMBA

__version__ = "0.1.0"
__all__ = ["BACKEND", "USING_NUMBA", "__version__"]
