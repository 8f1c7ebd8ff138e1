"""Stochastic semi-gradient training of linearised policies and the
attained-set builders.

One gradient step moves the first-layer weights along the batch average
of grad_a Q times the tangent feature matrix:

    W <- W + (eta / B) sum_b grad_a Q(s_b, a_b, t_b) Phi(s_b; W0),

with batches drawn from the exploration SDE under the current
linearised policy. Summary statistics of the policy at probe states
(action values, state Jacobians, pairwise action products) are recorded
after every step; these are the quantities whose concentration across
widths the experiments measure.

Attained sets collect the states reached within a short horizon from a
base state, either under weights sampled uniformly from the bounded
family or under independently trained weights.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .errors import DivergenceError
from .policy import (FamilySpec, TwoLayerPolicy, feature_matrix,
                     forward_linearised, init_params, policy_jacobian,
                     sample_family)
from .systems import grad_a_q, rollout, rollout_sde
from .activation import gelu_prime

__all__ = [
    "TrainConfig",
    "StatTrace",
    "TrainResult",
    "AttainedSet",
    "collect_batch",
    "batch_update_direction",
    "sgd_step",
    "train",
    "attained_set_sampled",
    "attained_set_trained",
]


@dataclass
class TrainConfig:
    """Knobs of one training run.

    The effective learning rate at width n is eta0 / sqrt(n). h_window
    is the constant-action window of the Q oracle; near the horizon it
    shrinks to half the remaining time.
    """

    eta0: float = 0.5
    batch: int = 8
    steps: int = 20
    fd_step: float = 1e-4
    h_window: float = 1e-2
    dt: float = 1e-3
    exploration_scale: float = 0.1
    start_state: Optional[np.ndarray] = None
    probe_states: tuple = ()
    width_schedule: tuple = (256,)

    def __post_init__(self):
        if self.eta0 <= 0 or self.batch < 0 or self.steps < 0:
            raise ValueError("eta0 must be positive; batch, steps non-negative")
        if self.fd_step <= 0 or self.h_window <= 0 or self.dt <= 0:
            raise ValueError("fd_step, h_window, dt must be positive")

    def eta(self, n):
        return self.eta0 / np.sqrt(n)


@dataclass
class StatTrace:
    """Per-step, per-probe-state policy statistics.

    For each record: the linearised action values A_j, the family-form
    state-Jacobian entries A_{j,k}, and the pairwise products A_j A_j'.
    """

    d_a: int
    d_s: int
    steps: list = field(default_factory=list)
    taus: list = field(default_factory=list)
    probes: list = field(default_factory=list)
    actions: list = field(default_factory=list)
    jacobians: list = field(default_factory=list)
    products: list = field(default_factory=list)

    def record(self, step, tau, params, probe_states):
        for idx, s in enumerate(probe_states):
            a = forward_linearised(params, s)
            jac = policy_jacobian(params, s)
            self.steps.append(step)
            self.taus.append(tau)
            self.probes.append(idx)
            self.actions.append(a)
            self.jacobians.append(jac)
            self.products.append(np.outer(a, a))

    def action_trace(self, probe_idx):
        """(taus, actions) arrays for one probe state, ordered by step."""
        mask = [i for i, p in enumerate(self.probes) if p == probe_idx]
        taus = np.array([self.taus[i] for i in mask])
        acts = np.array([self.actions[i] for i in mask])
        return taus, acts

    def to_csv(self, path):
        header = ["step", "tau", "probe"]
        header += [f"a_{j}" for j in range(self.d_a)]
        header += [f"jac_{j}_{k}" for j in range(self.d_a) for k in range(self.d_s)]
        header += [f"prod_{j}_{jp}" for j in range(self.d_a) for jp in range(self.d_a)]
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for i in range(len(self.steps)):
                row = [str(self.steps[i]), repr(float(self.taus[i])),
                       str(self.probes[i])]
                row += [repr(float(x)) for x in np.ravel(self.actions[i])]
                row += [repr(float(x)) for x in np.ravel(self.jacobians[i])]
                row += [repr(float(x)) for x in np.ravel(self.products[i])]
                fh.write(",".join(row) + "\n")


@dataclass
class TrainResult:
    params: object
    w_trace: np.ndarray
    stats: StatTrace
    diverged_at: Optional[int] = None


@dataclass
class AttainedSet:
    """States reached within time delta of a base state, with provenance."""

    base_state: np.ndarray
    delta: float
    points: np.ndarray       # (N, d_s)
    policy_ids: np.ndarray   # (N,)
    times: np.ndarray        # (N,) rollout time of each point
    num_diverged: int = 0

    def to_csv(self, path):
        d_s = self.points.shape[1]
        header = ["policy", "time"] + [f"s_{k}" for k in range(d_s)]
        with open(path, "w", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for pid, t, row in zip(self.policy_ids, self.times, self.points):
                cells = [str(int(pid)), repr(float(t))]
                cells += [repr(float(x)) for x in row]
                fh.write(",".join(cells) + "\n")


def collect_batch(system, params, batch_size, rng_seed, config):
    """Sample (state, action, time) tuples from the exploration SDE.

    Runs one Euler-Maruyama path over [0, horizon) under the current
    linearised policy at the configured noise scale, then draws
    batch_size recorded steps uniformly (times in [0, horizon)).
    """
    if batch_size == 0:
        return []
    if isinstance(rng_seed, np.random.SeedSequence):
        seq = rng_seed
    else:
        seq = np.random.SeedSequence(rng_seed)
    path_seed, index_seed = seq.spawn(2)
    policy = TwoLayerPolicy(params, mode="linearised")
    explore_system = _with_exploration(system, config.exploration_scale)
    s0 = _start_state(system, config)
    traj = rollout_sde(explore_system, policy, s0, system.horizon, config.dt,
                       path_seed)
    m = traj.times.shape[0] - 1  # usable indices 0..m-1, times below horizon
    rng = np.random.default_rng(index_seed)
    idx = rng.integers(0, m, size=batch_size)
    batch = []
    for i in idx:
        s = traj.states[i].copy()
        batch.append((s, forward_linearised(params, s), traj.times[i]))
    return batch


def _start_state(system, config):
    if config.start_state is not None:
        return np.asarray(config.start_state, dtype=float)
    return np.ones(system.d_s) / np.sqrt(system.d_s)


def _with_exploration(system, scale):
    """System with isotropic exploration at the configured scale."""
    from dataclasses import replace

    eye = np.eye(system.d_s)
    kernel = system.kernel
    if kernel is not None:
        kernel = type(kernel)(kernel.kind, kernel.a_mat, kernel.b_mat,
                              kernel.coupling, kernel.reward_kind, scale)
    return replace(system, exploration=lambda s: scale * eye, kernel=kernel)


def batch_update_direction(system, params, batch, config):
    """(1/B) sum_b grad_a Q(s_b, a_b, t_b) Phi(s_b; W0), a flat n*d_s vector."""
    policy = TwoLayerPolicy(params, mode="linearised")
    total = np.zeros(params.n * params.d_s)
    w0m = params.w0_blocks
    c0n = params.c0_scaled
    for s, a, t in batch:
        h_eff = min(config.h_window, 0.5 * (system.horizon - t))
        q = grad_a_q(system, policy, s, a, t, config.fd_step, h_eff, config.dt)
        # q @ Phi(s) without materialising Phi: per-unit coefficient times s.
        z0 = w0m @ s
        coeff = (c0n.T @ q) * gelu_prime(z0)
        total += np.outer(coeff, s).ravel()
    return total / len(batch)


def sgd_step(params, batch, system, eta, config):
    """One semi-gradient step; returns the new flat weight vector W.

    W0 and C0 are untouched; the update is exactly linear in eta and
    additive over batch elements.
    """
    if not batch:
        raise ValueError("batch must be nonempty")
    return params.w + eta * batch_update_direction(system, params, batch, config)


def train(system, params, config, rng_seed):
    """Run config.steps semi-gradient steps with fresh SDE batches.

    Records statistics at the probe states before training and after
    every step; deterministic given the seed. Divergence aborts the run
    and returns the partial trace with diverged_at set.
    """
    probe_states = [np.asarray(p, dtype=float) for p in config.probe_states]
    stats = StatTrace(d_a=params.d_a, d_s=params.d_s)
    eta = config.eta(params.n)
    current = params
    w_rows = [current.w.copy()]
    stats.record(0, 0.0, current, probe_states)
    seq = np.random.SeedSequence(rng_seed)
    diverged_at = None
    for step in range(1, config.steps + 1):
        batch_seed = seq.spawn(1)[0]
        try:
            batch = collect_batch(system, current, config.batch, batch_seed, config)
            new_w = sgd_step(current, batch, system, eta, config)
        except DivergenceError:
            diverged_at = step
            break
        current = current.with_w(new_w)
        w_rows.append(current.w.copy())
        stats.record(step, step * eta, current, probe_states)
    return TrainResult(params=current, w_trace=np.array(w_rows), stats=stats,
                       diverged_at=diverged_at)


def _recording_grid(delta, dt_sample):
    n_rec = int(round(delta / dt_sample))
    if n_rec < 1 or abs(n_rec * dt_sample - delta) > 1e-9 * max(1.0, abs(delta)):
        raise ValueError("dt_sample must divide delta (within rounding)")
    return n_rec


def _rollout_points(system, params_like, wstack, s, dt_sample, n_rec, substeps):
    """Family-mode rollouts for a stack of weight vectors.

    Returns (points, ok) like the kernel; falls back to the generic
    integrator for systems without a kernel encoding.
    """
    s = np.asarray(s, dtype=float).reshape(-1)
    dt = dt_sample / substeps
    if system.kernel is not None:
        spec = system.kernel
        return kernels.family_rollout_batch(
            spec.kind, spec.a_mat, spec.b_mat, spec.coupling,
            params_like.w0_blocks, params_like.c0_scaled,
            np.ascontiguousarray(wstack.reshape(wstack.shape[0], params_like.n,
                                                params_like.d_s)),
            s, dt, substeps, n_rec)
    n_pol = wstack.shape[0]
    points = np.zeros((n_pol, n_rec, system.d_s))
    ok = np.ones(n_pol, dtype=bool)
    for p in range(n_pol):
        policy = TwoLayerPolicy(params_like.with_w(wstack[p]), mode="family")
        try:
            traj = rollout(system, policy, s, n_rec * dt_sample, dt)
        except DivergenceError:
            ok[p] = False
            continue
        points[p] = traj.states[substeps::substeps]
    return points, ok


def _assemble(base_state, delta, dt_sample, n_rec, points, ok):
    if not np.any(ok):
        raise DivergenceError(delta, np.inf)
    times_row = dt_sample * np.arange(1, n_rec + 1)
    kept = np.flatnonzero(ok)
    flat_points = points[kept].reshape(-1, points.shape[2])
    policy_ids = np.repeat(kept, n_rec)
    times = np.tile(times_row, kept.size)
    return AttainedSet(base_state=np.asarray(base_state, dtype=float),
                       delta=float(delta), points=flat_points,
                       policy_ids=policy_ids, times=times,
                       num_diverged=int(np.sum(~ok)))


def attained_set_sampled(system, family_spec, s, delta, dt_sample,
                         num_policies, rng_seed, substeps=1):
    """Attained set under weights sampled uniformly from the family.

    Each policy gets its own seed spawned from rng_seed (the point set
    is independent of any parallelisation order); rollouts record every
    dt_sample up to delta; diverged policies are skipped and counted.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    n_rec = _recording_grid(delta, dt_sample)
    base = family_spec.base
    seeds = np.random.SeedSequence(rng_seed).spawn(num_policies)
    wstack = np.empty((num_policies, base.n * base.d_s))
    for p in range(num_policies):
        wstack[p] = sample_family(family_spec, seeds[p])
    points, ok = _rollout_points(system, base, wstack, s, dt_sample, n_rec,
                                 substeps)
    return _assemble(s, delta, dt_sample, n_rec, points, ok)


def attained_set_trained(system, config, s, delta, dt_sample, num_seeds, tau,
                         rng_seed, substeps=1):
    """Attained set of independently trained policies at gradient time tau.

    Each seed draws a fresh initialisation, trains for round(tau / eta)
    steps, and is rolled out in family mode from s for duration delta.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    n_rec = _recording_grid(delta, dt_sample)
    width = int(config.width_schedule[0])
    eta = config.eta(width)
    n_steps = int(round(tau / eta)) if tau > 0 else 0
    children = np.random.SeedSequence(rng_seed).spawn(2 * num_seeds)
    run_cfg = TrainConfig(eta0=config.eta0, batch=config.batch,
                          steps=n_steps, fd_step=config.fd_step,
                          h_window=config.h_window, dt=config.dt,
                          exploration_scale=config.exploration_scale,
                          start_state=config.start_state,
                          probe_states=(), width_schedule=(width,))
    points = np.zeros((num_seeds, n_rec, system.d_s))
    ok = np.ones(num_seeds, dtype=bool)
    for i in range(num_seeds):
        params = init_params(width, system.d_s, system.d_a, children[2 * i])
        result = train(system, params, run_cfg, children[2 * i + 1])
        if result.diverged_at is not None:
            ok[i] = False
            continue
        # Each seed has its own W0, so rollouts go one policy at a time.
        pts, good = _rollout_points(system, result.params,
                                    result.params.w[None, :], s, dt_sample,
                                    n_rec, substeps)
        points[i] = pts[0]
        ok[i] = bool(good[0])
    return _assemble(s, delta, dt_sample, n_rec, points, ok)
