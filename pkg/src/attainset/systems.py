"""Control-affine systems, integrators, value functions, and the
finite-difference action-gradient oracle.

Dynamics are ds/dt = g(s) + sum_i h_i(s) a_i with smooth drift g and
control columns h_i. Deterministic flows use classical fixed-step RK4;
the exploration SDE uses Euler-Maruyama at the same step. Catalog
systems (chain integrator, generic linear, pendulum chain) carry a
kernel encoding so the hot paths can run through
:mod:`attainset.kernels`; arbitrary user systems take the generic
callable path below.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import kernels
from .errors import ConfigError, DivergenceError
from .policy import TwoLayerPolicy

__all__ = [
    "ControlAffineSystem",
    "Trajectory",
    "SystemCatalogEntry",
    "KernelSpec",
    "CATALOG_NAMES",
    "chain_integrator",
    "linear_generic",
    "pendulum",
    "build_system",
    "closed_loop_derivative",
    "rollout",
    "rollout_sde",
    "flow_endpoint",
    "value",
    "q_h",
    "grad_a_q",
]

DIVERGENCE_BOUND = kernels.DIVERGENCE_BOUND
_FD_JACOBIAN_STEP = 1e-5

CATALOG_NAMES = ("chain_integrator", "linear_generic", "pendulum")

_REWARD_KINDS = {"zero": kernels.REWARD_ZERO, "neg_sq_norm": kernels.REWARD_NEG_SQ_NORM}


@dataclass(frozen=True)
class KernelSpec:
    """Integer-coded description of a catalog system for the kernels."""

    kind: int
    a_mat: np.ndarray
    b_mat: np.ndarray
    coupling: float
    reward_kind: Optional[int]
    sigma_scale: Optional[float]


@dataclass(frozen=True)
class ControlAffineSystem:
    """The continuous-time MDP: dynamics, reward, horizon, discount, noise."""

    d_s: int
    d_a: int
    drift: Callable[[np.ndarray], np.ndarray]
    control: Callable[[np.ndarray], np.ndarray]
    reward: Callable[[np.ndarray], float]
    horizon: float
    discount: float
    drift_jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    control_jacobians: Optional[Callable[[np.ndarray], np.ndarray]] = None
    exploration: Optional[Callable[[np.ndarray], np.ndarray]] = None
    kernel: Optional[KernelSpec] = None
    name: str = ""

    def __post_init__(self):
        if self.d_s < 1 or self.d_a < 1:
            raise ValueError("d_s and d_a must be >= 1")
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        if not self.discount > 0:
            raise ValueError("discount must be positive")

    def drift_jacobian_at(self, s):
        """d_s x d_s drift Jacobian; central differences if no provider."""
        if self.drift_jacobian is not None:
            return np.asarray(self.drift_jacobian(s), dtype=float)
        return _fd_jacobian(self.drift, s, self.d_s)

    def control_jacobians_at(self, s):
        """(d_a, d_s, d_s) stack of control-column Jacobians."""
        if self.control_jacobians is not None:
            return np.asarray(self.control_jacobians(s), dtype=float)
        out = np.empty((self.d_a, self.d_s, self.d_s))
        for j in range(self.d_a):
            col = lambda x, j=j: np.asarray(self.control(x), dtype=float)[:, j]
            out[j] = _fd_jacobian(col, s, self.d_s)
        return out


def _fd_jacobian(fn, s, d_out, step=_FD_JACOBIAN_STEP):
    s = np.asarray(s, dtype=float)
    jac = np.empty((d_out, s.shape[0]))
    for k in range(s.shape[0]):
        sp = s.copy()
        sm = s.copy()
        sp[k] += step
        sm[k] -= step
        jac[:, k] = (np.asarray(fn(sp), dtype=float) - np.asarray(fn(sm), dtype=float)) / (2 * step)
    return jac


@dataclass(frozen=True)
class Trajectory:
    """States recorded at strictly increasing times, starting at t = 0."""

    times: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=float)
        if times.shape[0] != states.shape[0]:
            raise ValueError("times and states must have equal length")
        if times.shape[0] == 0 or times[0] != 0.0:
            raise ValueError("times must start at 0")
        if np.any(np.diff(times) <= 0):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def final_state(self):
        return self.states[-1]


@dataclass(frozen=True)
class SystemCatalogEntry:
    """Name plus numeric parameters selecting a built-in system."""

    name: str
    parameters: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in CATALOG_NAMES:
            raise ConfigError(
                f"unknown system {self.name!r}; catalog: {CATALOG_NAMES}"
            )


def _resolve_reward(reward):
    """Map a reward spec to (callable, kernel_kind_or_None)."""
    if callable(reward):
        return reward, None
    if reward in ("zero", None):
        return (lambda s: 0.0), kernels.REWARD_ZERO
    if reward == "neg_sq_norm":
        return (lambda s: -float(np.dot(s, s))), kernels.REWARD_NEG_SQ_NORM
    raise ConfigError(f"unknown reward spec {reward!r}")


def linear_generic(a_mat, b_mat, horizon=1.0, discount=1.0, reward="zero",
                   exploration_scale=0.1, name="linear_generic"):
    """Linear system ds/dt = A s + B a."""
    a_mat = np.array(a_mat, dtype=float)
    b_mat = np.array(b_mat, dtype=float)
    if a_mat.ndim != 2 or a_mat.shape[0] != a_mat.shape[1]:
        raise ConfigError("A must be square")
    if b_mat.ndim == 1:
        b_mat = b_mat[:, None]
    if b_mat.shape[0] != a_mat.shape[0]:
        raise ConfigError("B must have d_s rows")
    if not (np.all(np.isfinite(a_mat)) and np.all(np.isfinite(b_mat))):
        raise ConfigError("system matrices must be finite")
    d_s, d_a = b_mat.shape
    reward_fn, reward_kind = _resolve_reward(reward)
    zero_jac = np.zeros((d_a, d_s, d_s))
    return ControlAffineSystem(
        d_s=d_s,
        d_a=d_a,
        drift=lambda s: a_mat @ np.asarray(s, dtype=float),
        control=lambda s: b_mat,
        reward=reward_fn,
        horizon=horizon,
        discount=discount,
        drift_jacobian=lambda s: a_mat,
        control_jacobians=lambda s: zero_jac,
        exploration=_isotropic(d_s, exploration_scale),
        kernel=KernelSpec(kernels.KIND_LINEAR, a_mat, b_mat, 0.0, reward_kind,
                          exploration_scale),
        name=name,
    )


def chain_integrator(d_s, horizon=1.0, discount=1.0, reward="zero",
                     exploration_scale=0.1):
    """Chain of integrators: ds_i/dt = s_{i+1}, ds_{d_s}/dt = a (fully reachable)."""
    if d_s < 1:
        raise ConfigError("chain integrator needs d_s >= 1")
    a_mat = np.eye(d_s, k=1)
    b_mat = np.zeros((d_s, 1))
    b_mat[-1, 0] = 1.0
    return linear_generic(a_mat, b_mat, horizon=horizon, discount=discount,
                          reward=reward, exploration_scale=exploration_scale,
                          name="chain_integrator")


def pendulum(links=1, coupling=1.0, horizon=1.0, discount=1.0, reward="zero",
             exploration_scale=0.1):
    """Torsionally coupled pendulum chain, torque on the last link.

    State (theta_1..theta_L, omega_1..omega_L); d_s = 2 * links, d_a = 1:

        dtheta_i/dt = omega_i
        domega_i/dt = -sin(theta_i) - k * sum_nbr (theta_i - theta_nbr)
                      + a * [i == L]

    links = 1 is the classic planar pendulum (s_2, -sin s_1 + a).
    """
    links = int(links)
    if links < 1:
        raise ConfigError("pendulum needs links >= 1")
    d_s = 2 * links
    b_mat = np.zeros((d_s, 1))
    b_mat[-1, 0] = 1.0
    k = float(coupling)

    def drift(s):
        s = np.asarray(s, dtype=float)
        theta = s[:links]
        out = np.empty(d_s)
        out[:links] = s[links:]
        acc = -np.sin(theta)
        if links > 1:
            acc[1:] -= k * (theta[1:] - theta[:-1])
            acc[:-1] -= k * (theta[:-1] - theta[1:])
        out[links:] = acc
        return out

    def drift_jacobian(s):
        s = np.asarray(s, dtype=float)
        jac = np.zeros((d_s, d_s))
        jac[:links, links:] = np.eye(links)
        block = np.diag(-np.cos(s[:links]))
        if links > 1:
            lap = 2.0 * np.eye(links)
            lap[0, 0] = lap[-1, -1] = 1.0
            lap -= np.eye(links, k=1) + np.eye(links, k=-1)
            block -= k * lap
        jac[links:, :links] = block
        return jac

    reward_fn, reward_kind = _resolve_reward(reward)
    zero_jac = np.zeros((1, d_s, d_s))
    return ControlAffineSystem(
        d_s=d_s,
        d_a=1,
        drift=drift,
        control=lambda s: b_mat,
        reward=reward_fn,
        horizon=horizon,
        discount=discount,
        drift_jacobian=drift_jacobian,
        control_jacobians=lambda s: zero_jac,
        exploration=_isotropic(d_s, exploration_scale),
        kernel=KernelSpec(kernels.KIND_PENDULUM, np.zeros((1, 1)), b_mat, k,
                          reward_kind, exploration_scale),
        name="pendulum",
    )


def _isotropic(d_s, scale):
    eye = np.eye(d_s)
    return lambda s: scale * eye


def build_system(entry, horizon=1.0, discount=1.0, reward="zero",
                 exploration_scale=0.1):
    """Instantiate a catalog system from a SystemCatalogEntry."""
    params = dict(entry.parameters)
    common = dict(horizon=params.pop("horizon", horizon),
                  discount=params.pop("discount", discount),
                  reward=params.pop("reward", reward),
                  exploration_scale=params.pop("exploration_scale", exploration_scale))
    try:
        if entry.name == "chain_integrator":
            return chain_integrator(int(params.pop("d_s")), **common, **params)
        if entry.name == "linear_generic":
            a_mat = _matrix_from_config(params.pop("A"), params.get("d_s"), params.get("d_s"))
            b_mat = _matrix_from_config(params.pop("B"), params.get("d_s"), params.get("d_a"))
            params.pop("d_s", None)
            params.pop("d_a", None)
            return linear_generic(a_mat, b_mat, **common, **params)
        return pendulum(**common, **params)
    except KeyError as exc:
        raise ConfigError(f"missing parameter for {entry.name}: {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {entry.name}: {exc}") from exc


def _matrix_from_config(spec, rows, cols):
    """Matrix from nested lists, or a flat row-major list with given dims."""
    arr = np.array(spec, dtype=float)
    if arr.ndim == 1:
        if rows is None or cols is None:
            raise ConfigError("flat matrix spec needs explicit d_s / d_a")
        arr = arr.reshape(int(rows), int(cols))
    return arr


# ---------------------------------------------------------------------------
# Operations


def closed_loop_derivative(system, policy, s):
    """g(s) + control(s) . policy(s), with dimension checks."""
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape[0] != system.d_s:
        raise ValueError(f"state has length {s.shape[0]}, expected {system.d_s}")
    if not np.all(np.isfinite(s)):
        raise ValueError("state must be finite")
    g = np.asarray(system.drift(s), dtype=float).reshape(-1)
    h = np.asarray(system.control(s), dtype=float)
    a = np.asarray(policy(s), dtype=float).reshape(-1)
    if g.shape[0] != system.d_s:
        raise ValueError("drift output has wrong length")
    if h.shape != (system.d_s, system.d_a):
        raise ValueError(f"control output has shape {h.shape}, "
                         f"expected {(system.d_s, system.d_a)}")
    if a.shape[0] != system.d_a:
        raise ValueError(f"policy output has length {a.shape[0]}, expected {system.d_a}")
    return g + h @ a


def _steps_for(duration, dt):
    m = max(1, int(round(duration / dt)))
    return m, duration / m


def rollout(system, policy, s0, duration, dt):
    """Fixed-step RK4 integration of the closed loop; records every step."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if duration < dt:
        raise ValueError("duration must be at least dt")
    m, step = _steps_for(duration, dt)
    s = np.asarray(s0, dtype=float).reshape(-1).copy()
    states = np.empty((m + 1, system.d_s))
    states[0] = s
    f = lambda x: closed_loop_derivative(system, policy, x)
    for i in range(m):
        k1 = f(s)
        k2 = f(s + 0.5 * step * k1)
        k3 = f(s + 0.5 * step * k2)
        k4 = f(s + step * k3)
        s = s + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _guard(s, (i + 1) * step)
        states[i + 1] = s
    times = step * np.arange(m + 1)
    return Trajectory(times=times, states=states)


def _guard(s, t):
    if not np.all(np.isfinite(s)) or np.max(np.abs(s)) > DIVERGENCE_BOUND:
        finite = s[np.isfinite(s)]
        mag = np.max(np.abs(finite)) if finite.size else np.inf
        raise DivergenceError(t, mag)


def flow_endpoint(system, policy, s0, duration, dt):
    """Final state of a rollout, without recording the path.

    Family-mode two-layer policies on catalog systems go through the
    batch kernel; everything else falls back to :func:`rollout`.
    """
    spec = system.kernel
    if (spec is not None and isinstance(policy, TwoLayerPolicy)
            and policy.mode == "family"):
        m, step = _steps_for(duration, dt)
        p = policy.params
        pts, ok = kernels.family_rollout_batch(
            spec.kind, spec.a_mat, spec.b_mat, spec.coupling,
            p.w0_blocks, p.c0_scaled,
            np.ascontiguousarray(p.w_blocks[None, :, :]),
            np.asarray(s0, dtype=float).reshape(-1), step, m, 1)
        if not ok[0]:
            raise DivergenceError(duration, np.inf)
        return pts[0, 0]
    return rollout(system, policy, s0, duration, dt).final_state


def rollout_sde(system, policy, s0, duration, dt, rng_seed):
    """Euler-Maruyama path of dS = (g + h pi) dt + sigma dW; seeded."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    if system.exploration is None:
        raise ValueError("system has no exploration map")
    m, step = _steps_for(duration, dt)
    rng = np.random.default_rng(rng_seed)
    noise = rng.standard_normal((m, system.d_s))

    spec = system.kernel
    if (spec is not None and spec.sigma_scale is not None
            and isinstance(policy, TwoLayerPolicy)
            and policy.mode in ("family", "linearised")):
        p = policy.params
        mode = kernels.MODE_FAMILY if policy.mode == "family" else kernels.MODE_LINEARISED
        states, fail = kernels.sde_rollout(
            spec.kind, spec.a_mat, spec.b_mat, spec.coupling, mode,
            p.w0_blocks, p.c0_scaled, p.w_blocks,
            np.asarray(s0, dtype=float).reshape(-1), step, noise, spec.sigma_scale)
        if fail >= 0.0:
            raise DivergenceError(fail, np.inf)
        return Trajectory(times=step * np.arange(m + 1), states=states)

    s = np.asarray(s0, dtype=float).reshape(-1).copy()
    states = np.empty((m + 1, system.d_s))
    states[0] = s
    sqdt = np.sqrt(step)
    for i in range(m):
        deriv = closed_loop_derivative(system, policy, s)
        sigma = np.asarray(system.exploration(s), dtype=float)
        s = s + step * deriv + sqdt * (sigma @ noise[i])
        _guard(s, (i + 1) * step)
        states[i + 1] = s
    return Trajectory(times=step * np.arange(m + 1), states=states)


def _kernel_value_args(system, policy):
    """Kernel argument tuple if the (system, policy, reward) triple is
    kernel-representable, else None."""
    spec = system.kernel
    if spec is None or spec.reward_kind is None:
        return None
    if not isinstance(policy, TwoLayerPolicy) or policy.mode == "canonical":
        return None
    p = policy.params
    mode = kernels.MODE_FAMILY if policy.mode == "family" else kernels.MODE_LINEARISED
    return (spec.kind, spec.a_mat, spec.b_mat, spec.coupling, spec.reward_kind,
            mode, p.w0_blocks, p.c0_scaled, p.w_blocks)


def value(system, policy, s0, t, dt):
    """Discounted reward-to-go from state s0 at clock time t.

    Trapezoid quadrature of exp(-(l + t)/lambda) f_r(s_l) along the
    deterministic rollout from t to the horizon, at step dt.
    """
    if not 0 <= t < system.horizon:
        raise ValueError("t must lie in [0, horizon)")
    s0 = np.asarray(s0, dtype=float).reshape(-1)
    args = _kernel_value_args(system, policy)
    if args is not None:
        val, fail = kernels.policy_value(*args, s0, float(t), system.horizon,
                                         system.discount, dt)
        if fail >= 0.0:
            raise DivergenceError(fail, np.inf)
        return float(val)

    lam = system.discount
    m, step = _steps_for(system.horizon - t, dt)
    s = s0.copy()
    total = 0.5 * np.exp(-2.0 * t / lam) * system.reward(s)
    f = lambda x: closed_loop_derivative(system, policy, x)
    for i in range(1, m + 1):
        k1 = f(s)
        k2 = f(s + 0.5 * step * k1)
        k3 = f(s + 0.5 * step * k2)
        k4 = f(s + step * k3)
        s = s + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _guard(s, t + i * step)
        frac = 0.5 if i == m else 1.0
        total += frac * np.exp(-(2.0 * t + i * step) / lam) * system.reward(s)
    return float(step * total)


def q_h(system, policy, s, a, t, h, dt):
    """Action value with a short constant-action window.

    Holds a for duration h (discounted reward integral included), then
    returns the policy's value from the reached state at time t + h.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if not t + h < system.horizon:
        raise ValueError("t + h must stay below the horizon")
    s = np.asarray(s, dtype=float).reshape(-1)
    a = np.asarray(a, dtype=float).reshape(-1)
    if a.shape[0] != system.d_a:
        raise ValueError(f"action has length {a.shape[0]}, expected {system.d_a}")
    args = _kernel_value_args(system, policy)
    if args is not None:
        val, fail = kernels.hold_then_value(*args, s, a, float(t), float(h),
                                            system.horizon, system.discount, dt)
        if fail >= 0.0:
            raise DivergenceError(fail, np.inf)
        return float(val)

    lam = system.discount
    m, step = _steps_for(h, dt)
    cur = s.copy()
    total = 0.5 * np.exp(-t / lam) * system.reward(cur)
    f = lambda x: np.asarray(system.drift(x), dtype=float) + \
        np.asarray(system.control(x), dtype=float) @ a
    for i in range(1, m + 1):
        k1 = f(cur)
        k2 = f(cur + 0.5 * step * k1)
        k3 = f(cur + 0.5 * step * k2)
        k4 = f(cur + step * k3)
        cur = cur + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _guard(cur, t + i * step)
        frac = 0.5 if i == m else 1.0
        total += frac * np.exp(-(i * step + t) / lam) * system.reward(cur)
    return float(step * total) + value(system, policy, cur, t + h, dt)


def grad_a_q(system, policy, s, a, t, fd_step, h, dt):
    """Central finite differences of q_h over each action coordinate.

    This is the assumed-exact action-gradient oracle, discretised.
    """
    if not fd_step > 0:
        raise ValueError("fd_step must be positive")
    a = np.asarray(a, dtype=float).reshape(-1)
    grad = np.empty(system.d_a)
    for i in range(system.d_a):
        ap = a.copy()
        am = a.copy()
        ap[i] += fd_step
        am[i] -= fd_step
        qp = q_h(system, policy, s, ap, t, h, dt)
        qm = q_h(system, policy, s, am, t, h, dt)
        grad[i] = (qp - qm) / (2.0 * fd_step)
    return grad
