"""Dispatch facade for the accelerated kernels.

Importing this module binds the kernel functions of the backend chosen
by ``ATTAINSET_BACKEND`` (see :mod:`attainset._backend`). All callers go
through this facade; the two implementations are interchangeable.
"""

from ._backend import BACKEND, USING_NUMBA

if USING_NUMBA:
    from . import _kernels_numba as _impl
else:
    from . import _kernels_numpy as _impl

KIND_LINEAR = _impl.KIND_LINEAR
KIND_PENDULUM = _impl.KIND_PENDULUM
MODE_FAMILY = _impl.MODE_FAMILY
MODE_LINEARISED = _impl.MODE_LINEARISED
REWARD_ZERO = _impl.REWARD_ZERO
REWARD_NEG_SQ_NORM = _impl.REWARD_NEG_SQ_NORM
DIVERGENCE_BOUND = _impl.DIVERGENCE_BOUND

family_rollout_batch = _impl.family_rollout_batch
policy_value = _impl.policy_value
hold_then_value = _impl.hold_then_value
sde_rollout = _impl.sde_rollout
two_nn_brute = _impl.two_nn_brute

__all__ = [
    "BACKEND",
    "USING_NUMBA",
    "KIND_LINEAR",
    "KIND_PENDULUM",
    "MODE_FAMILY",
    "MODE_LINEARISED",
    "REWARD_ZERO",
    "REWARD_NEG_SQ_NORM",
    "DIVERGENCE_BOUND",
    "family_rollout_batch",
    "policy_value",
    "hold_then_value",
    "sde_rollout",
    "two_nn_brute",
]
