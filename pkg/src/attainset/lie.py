"""Lie derivatives of closed-loop fields and the order-2 truncated
exponential map, with truncation-order measurement.

For the field X(s) = g(s) + h(s) a(s) with a feedback policy a, the
flow from s admits the series

    e_t^X(s) = s + t L_X(s) + (t^2/2) L_X^2(s) + O(t^3),

truncated here after the second-order term. The second Lie derivative
is assembled from the drift Jacobian, the control-column Jacobians, the
policy value and the policy state-Jacobian (the five-group expansion of
the chain rule); the remainder's cubic order is measured empirically by
a log-log fit against an RK4 reference flow.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGridError, TruncatedSeriesError
from .policy import TwoLayerParams, TwoLayerPolicy
from .systems import ControlAffineSystem, closed_loop_derivative, flow_endpoint

__all__ = [
    "ClosedLoopField",
    "LieExpansion",
    "lie_first",
    "lie_second",
    "exp_map_trunc2",
    "lie_expansion",
    "truncation_error_slope",
]

_TRUNCATION_FLOOR = 1e-12


@dataclass(frozen=True)
class ClosedLoopField:
    """A system closed under a two-layer policy in family or linearised mode."""

    system: ControlAffineSystem
    policy_params: TwoLayerParams
    mode: str = "family"

    def __post_init__(self):
        if self.mode not in ("family", "linearised"):
            raise ValueError("mode must be 'family' or 'linearised'")

    @property
    def policy(self):
        return TwoLayerPolicy(self.policy_params, mode=self.mode)

    def __call__(self, s):
        return closed_loop_derivative(self.system, self.policy, s)


@dataclass(frozen=True)
class LieExpansion:
    """Zeroth, first and second Lie terms at a point; a polynomial curve in t."""

    order0: np.ndarray
    order1: np.ndarray
    order2: np.ndarray

    def evaluate(self, t):
        return self.order0 + t * self.order1 + 0.5 * t * t * self.order2


def lie_first(field, s):
    """First Lie derivative of the identity: the field itself, g + h a."""
    return field(s)


def lie_second(field, s):
    """Second Lie derivative L_X^2 at s via the explicit five-group sum.

    With v = g + h a, component i is sum_k v_k d(v_i)/ds_k; the five
    groups separate drift-drift, control-drift, drift-control (both the
    column Jacobians and the policy Jacobian), control-control, and
    control-policy terms.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    system = field.system
    policy = field.policy
    g = np.asarray(system.drift(s), dtype=float).reshape(-1)
    h = np.asarray(system.control(s), dtype=float)
    a = np.asarray(policy(s), dtype=float).reshape(-1)
    jg = system.drift_jacobian_at(s)
    jh = system.control_jacobians_at(s)  # (d_a, d_s, d_s)
    ja = policy.state_jacobian(s)        # (d_a, d_s)

    ha = h @ a
    jh_weighted = np.einsum("j,jik->ik", a, jh)
    group1 = jg @ g
    group2 = jg @ ha
    group3 = jh_weighted @ g + h @ (ja @ g)
    group4 = jh_weighted @ ha
    group5 = h @ (ja @ ha)
    return group1 + group2 + group3 + group4 + group5


def lie_expansion(field, s):
    """Bundle (s, L_X s, L_X^2 s) as a LieExpansion."""
    s = np.asarray(s, dtype=float).reshape(-1)
    return LieExpansion(order0=s.copy(), order1=lie_first(field, s),
                        order2=lie_second(field, s))


def exp_map_trunc2(field, s, t):
    """Order-2 truncation of the exponential map: s + t L1 + (t^2/2) L2."""
    return lie_expansion(field, s).evaluate(t)


def truncation_error_slope(field, s, t_grid, dt_ref=1e-4):
    """Least-squares slope of log truncation error against log t.

    Compares exp_map_trunc2 with an RK4 reference flow at step dt_ref
    over the given positive, sorted grid (spanning at least 1.5
    decades). A cubic remainder shows up as a slope near 3.

    Raises DegenerateGridError for unusable grids and
    TruncatedSeriesError when every error sits at machine-precision
    level (the series truncated; no order to fit).
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or t_grid.size < 3:
        raise DegenerateGridError("need at least 3 grid points")
    if np.any(t_grid <= 0) or np.any(np.diff(t_grid) <= 0):
        raise DegenerateGridError("grid must be positive and strictly increasing")
    decades = np.log10(t_grid[-1] / t_grid[0])
    if decades < 1.5 - 1e-9:
        raise DegenerateGridError(
            f"grid spans {decades:.2f} decades; need at least 1.5")

    s = np.asarray(s, dtype=float).reshape(-1)
    expansion = lie_expansion(field, s)
    errors = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        approx = expansion.evaluate(t)
        reference = flow_endpoint(field.system, field.policy, s, t,
                                  min(dt_ref, t / 4.0))
        errors[i] = np.linalg.norm(approx - reference)

    scale = 1.0 + np.linalg.norm(s)
    if np.max(errors) < _TRUNCATION_FLOOR * scale:
        raise TruncatedSeriesError(
            "truncation errors at machine precision; series truncated")
    # Guard individual zero errors before taking logs.
    errors = np.maximum(errors, 1e-300)
    x = np.log(t_grid)
    y = np.log(errors)
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)
