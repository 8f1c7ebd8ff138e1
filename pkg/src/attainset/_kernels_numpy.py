"""Pure numpy implementations of the hot kernels.

Same contracts as :mod:`attainset._kernels_numba`; see
:mod:`attainset.kernels` for the dispatch and the shared constants.

System dynamics are encoded by an integer ``kind`` plus parameter
arrays so that the same kernels serve every catalog system:

* ``KIND_LINEAR``: ds/dt = A s + B a
* ``KIND_PENDULUM``: torsionally coupled pendulum chain with state
  (theta_1..theta_L, omega_1..omega_L) and constant control matrix B.

Policies are two-layer networks given by ``w0m`` (n, d_s) initial
first-layer blocks, ``c0n`` (d_a, n) output weights already divided by
sqrt(n), and ``wm`` the current first-layer blocks. ``mode`` selects the
family form Phi(s) W or the linearised form f(s; W0) + Phi(s)(W - W0).
"""

import numpy as np
from scipy.special import erf

KIND_LINEAR = 0
KIND_PENDULUM = 1

MODE_FAMILY = 0
MODE_LINEARISED = 1

REWARD_ZERO = 0
REWARD_NEG_SQ_NORM = 1

DIVERGENCE_BOUND = 1e8

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _phi(z):
    return 0.5 * (1.0 + erf(z * _INV_SQRT2))


def _pdf(z):
    return _INV_SQRT_2PI * np.exp(-0.5 * z * z)


def _gelu(z):
    return z * _phi(z)


def _gelu_prime(z):
    return _phi(z) + z * _pdf(z)


def _drift(kind, a_mat, coupling, s):
    """Drift g(s) for a single state vector."""
    if kind == KIND_LINEAR:
        return a_mat @ s
    links = s.shape[0] // 2
    theta = s[:links]
    out = np.empty_like(s)
    out[:links] = s[links:]
    acc = -np.sin(theta)
    if links > 1:
        acc[1:] -= coupling * (theta[1:] - theta[:-1])
        acc[:-1] -= coupling * (theta[:-1] - theta[1:])
    out[links:] = acc
    return out


def _drift_batch(kind, a_mat, coupling, states):
    """Drift for a (P, d_s) batch of states."""
    if kind == KIND_LINEAR:
        return states @ a_mat.T
    links = states.shape[1] // 2
    theta = states[:, :links]
    out = np.empty_like(states)
    out[:, :links] = states[:, links:]
    acc = -np.sin(theta)
    if links > 1:
        acc[:, 1:] -= coupling * (theta[:, 1:] - theta[:, :-1])
        acc[:, :-1] -= coupling * (theta[:, :-1] - theta[:, 1:])
    out[:, links:] = acc
    return out


def _action(mode, w0m, c0n, wm, s):
    z0 = w0m @ s
    if mode == MODE_FAMILY:
        return c0n @ (_gelu_prime(z0) * (wm @ s))
    return c0n @ (_gelu(z0) + _gelu_prime(z0) * ((wm - w0m) @ s))


def _closed_loop(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s):
    return _drift(kind, a_mat, coupling, s) + b_mat @ _action(mode, w0m, c0n, wm, s)


def _rk4_step(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s, dt):
    k1 = _closed_loop(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s)
    k2 = _closed_loop(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s + 0.5 * dt * k1)
    k3 = _closed_loop(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s + 0.5 * dt * k2)
    k4 = _closed_loop(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s + dt * k3)
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def family_rollout_batch(kind, a_mat, b_mat, coupling, w0m, c0n, wstack, s0, dt, substeps, n_rec):
    """Roll out the family-mode closed loop for a batch of weight vectors.

    wstack: (P, n, d_s) per-policy first-layer blocks. Records the state
    every ``substeps`` RK4 steps of size ``dt``, ``n_rec`` times.

    Returns (points, ok): points (P, n_rec, d_s); ok[p] False if policy p
    diverged (its points are then unusable and should be dropped).
    """
    n_pol = wstack.shape[0]
    d_s = s0.shape[0]
    points = np.zeros((n_pol, n_rec, d_s))
    ok = np.ones(n_pol, dtype=np.bool_)
    states = np.broadcast_to(s0, (n_pol, d_s)).copy()
    phi1 = _gelu_prime  # family mode only

    def derivative(batch):
        z0 = batch @ w0m.T
        u = np.einsum("pk,pnk->pn", batch, wstack)
        actions = (phi1(z0) * u) @ c0n.T
        return _drift_batch(kind, a_mat, coupling, batch) + actions @ b_mat.T

    alive = ok.copy()
    for rec in range(n_rec):
        for _ in range(substeps):
            k1 = derivative(states)
            k2 = derivative(states + 0.5 * dt * k1)
            k3 = derivative(states + 0.5 * dt * k2)
            k4 = derivative(states + dt * k3)
            new = states + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            good = np.all(np.isfinite(new), axis=1) & (
                np.max(np.abs(new), axis=1) <= DIVERGENCE_BOUND
            )
            alive &= good
            states = np.where(alive[:, None], new, states)
        ok &= alive
        points[:, rec, :] = states
    return points, ok


def _trapezoid_value(kind, a_mat, b_mat, coupling, reward_kind, mode, w0m, c0n, wm,
                     s, t, horizon, lam, dt):
    """Discounted reward integral from state s at clock time t to the horizon.

    Uses weight exp(-(l + t)/lam) with l the absolute time, i.e.
    exp(-(2 t + u)/lam) at elapsed time u. Returns (value, fail_time).
    """
    duration = horizon - t
    m = max(1, int(round(duration / dt)))
    step = duration / m
    if reward_kind == REWARD_ZERO:
        total = 0.0
    else:
        total = 0.5 * np.exp(-2.0 * t / lam) * _reward(reward_kind, s)
    cur = s.copy()
    for i in range(1, m + 1):
        cur = _rk4_step(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, cur, step)
        if not np.all(np.isfinite(cur)) or np.max(np.abs(cur)) > DIVERGENCE_BOUND:
            return np.nan, t + i * step
        if reward_kind != REWARD_ZERO:
            weight = np.exp(-(2.0 * t + i * step) / lam)
            frac = 0.5 if i == m else 1.0
            total += frac * weight * _reward(reward_kind, cur)
    return step * total, -1.0


def _reward(reward_kind, s):
    if reward_kind == REWARD_NEG_SQ_NORM:
        return -float(np.dot(s, s))
    return 0.0


def policy_value(kind, a_mat, b_mat, coupling, reward_kind, mode, w0m, c0n, wm,
                 s, t, horizon, lam, dt):
    """Value of the policy from state s at time t (trapezoid quadrature)."""
    return _trapezoid_value(kind, a_mat, b_mat, coupling, reward_kind, mode,
                            w0m, c0n, wm, s, t, horizon, lam, dt)


def hold_then_value(kind, a_mat, b_mat, coupling, reward_kind, mode, w0m, c0n, wm,
                    s, a_const, t, h, horizon, lam, dt):
    """Q_h: hold a_const for duration h, then follow the policy to the horizon."""
    m = max(1, int(round(h / dt)))
    step = h / m
    if reward_kind == REWARD_ZERO:
        total = 0.0
    else:
        total = 0.5 * np.exp(-t / lam) * _reward(reward_kind, s)
    drift_extra = b_mat @ a_const
    cur = s.copy()
    for i in range(1, m + 1):
        k1 = _drift(kind, a_mat, coupling, cur) + drift_extra
        k2 = _drift(kind, a_mat, coupling, cur + 0.5 * step * k1) + drift_extra
        k3 = _drift(kind, a_mat, coupling, cur + 0.5 * step * k2) + drift_extra
        k4 = _drift(kind, a_mat, coupling, cur + step * k3) + drift_extra
        cur = cur + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(cur)) or np.max(np.abs(cur)) > DIVERGENCE_BOUND:
            return np.nan, t + i * step
        if reward_kind != REWARD_ZERO:
            weight = np.exp(-(i * step + t) / lam)
            frac = 0.5 if i == m else 1.0
            total += frac * weight * _reward(reward_kind, cur)
    tail, fail = policy_value(kind, a_mat, b_mat, coupling, reward_kind, mode,
                              w0m, c0n, wm, cur, t + h, horizon, lam, dt)
    if fail >= 0.0:
        return np.nan, fail
    return step * total + tail, -1.0


def sde_rollout(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s0, dt, noise,
                sigma_scale):
    """Euler-Maruyama path with isotropic exploration noise.

    noise: (n_steps, d_s) pre-drawn standard normals (keeps the draw
    sequence identical across backends). Returns (states, fail_time) with
    states of shape (n_steps + 1, d_s).
    """
    n_steps = noise.shape[0]
    d_s = s0.shape[0]
    states = np.zeros((n_steps + 1, d_s))
    states[0] = s0
    sqdt = np.sqrt(dt)
    cur = s0.copy()
    for i in range(n_steps):
        deriv = _closed_loop(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, cur)
        cur = cur + dt * deriv + sqdt * sigma_scale * noise[i]
        if not np.all(np.isfinite(cur)) or np.max(np.abs(cur)) > DIVERGENCE_BOUND:
            return states, (i + 1) * dt
        states[i + 1] = cur
    return states, -1.0


def two_nn_brute(points):
    """Exact first/second nearest-neighbor distances by brute force.

    points: (N, d) with exact duplicates already removed. Returns
    (r1, r2). Distances are computed from explicit coordinate
    differences (numerically stable under translations).
    """
    n = points.shape[0]
    r1 = np.empty(n)
    r2 = np.empty(n)
    chunk = max(1, int(2e7 // max(1, n * points.shape[1])))
    for start in range(0, n, chunk):
        stop = min(n, start + chunk)
        diff = points[start:stop, None, :] - points[None, :, :]
        sq = np.einsum("ijk,ijk->ij", diff, diff)
        for row in range(stop - start):
            sq[row, start + row] = -1.0  # self marker, sorts first
        part = np.partition(sq, 2, axis=1)[:, :3]
        part.sort(axis=1)
        r1[start:stop] = np.sqrt(np.maximum(part[:, 1], 0.0))
        r2[start:stop] = np.sqrt(np.maximum(part[:, 2], 0.0))
    return r1, r2
