"""Numba @njit implementations of the hot kernels.

Mirrors :mod:`attainset._kernels_numpy` exactly (same contracts, same
algorithms); see that module for the encoding conventions. fastmath is
left off so runs are bit-reproducible for a fixed backend.
"""

import math

import numpy as np
from numba import njit

KIND_LINEAR = 0
KIND_PENDULUM = 1

MODE_FAMILY = 0
MODE_LINEARISED = 1

REWARD_ZERO = 0
REWARD_NEG_SQ_NORM = 1

DIVERGENCE_BOUND = 1e8

_INV_SQRT2 = 1.0 / math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


@njit(cache=True)
def _gelu_s(z):
    return z * 0.5 * (1.0 + math.erf(z * _INV_SQRT2))


@njit(cache=True)
def _gelu_prime_s(z):
    return 0.5 * (1.0 + math.erf(z * _INV_SQRT2)) + z * _INV_SQRT_2PI * math.exp(-0.5 * z * z)


@njit(cache=True)
def _drift_into(kind, a_mat, coupling, s, out):
    d_s = s.shape[0]
    if kind == KIND_LINEAR:
        for i in range(d_s):
            acc = 0.0
            for k in range(d_s):
                acc += a_mat[i, k] * s[k]
            out[i] = acc
        return
    links = d_s // 2
    for i in range(links):
        out[i] = s[links + i]
        acc = -math.sin(s[i])
        if i > 0:
            acc -= coupling * (s[i] - s[i - 1])
        if i < links - 1:
            acc -= coupling * (s[i] - s[i + 1])
        out[links + i] = acc


@njit(cache=True)
def _action_into(mode, w0m, c0n, wm, s, out):
    n, d_s = w0m.shape
    d_a = c0n.shape[0]
    for j in range(d_a):
        out[j] = 0.0
    for k in range(n):
        z0 = 0.0
        for i in range(d_s):
            z0 += w0m[k, i] * s[i]
        if mode == MODE_FAMILY:
            u = 0.0
            for i in range(d_s):
                u += wm[k, i] * s[i]
            unit = _gelu_prime_s(z0) * u
        else:
            u = 0.0
            for i in range(d_s):
                u += (wm[k, i] - w0m[k, i]) * s[i]
            unit = _gelu_s(z0) + _gelu_prime_s(z0) * u
        for j in range(d_a):
            out[j] += c0n[j, k] * unit
    return out


@njit(cache=True)
def _closed_loop_into(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s, act, out):
    _drift_into(kind, a_mat, coupling, s, out)
    _action_into(mode, w0m, c0n, wm, s, act)
    d_s = s.shape[0]
    d_a = act.shape[0]
    for i in range(d_s):
        for j in range(d_a):
            out[i] += b_mat[i, j] * act[j]


@njit(cache=True)
def _rk4_inplace(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s, dt,
                 k1, k2, k3, k4, tmp, act):
    d_s = s.shape[0]
    _closed_loop_into(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s, act, k1)
    for i in range(d_s):
        tmp[i] = s[i] + 0.5 * dt * k1[i]
    _closed_loop_into(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, tmp, act, k2)
    for i in range(d_s):
        tmp[i] = s[i] + 0.5 * dt * k2[i]
    _closed_loop_into(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, tmp, act, k3)
    for i in range(d_s):
        tmp[i] = s[i] + dt * k3[i]
    _closed_loop_into(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, tmp, act, k4)
    for i in range(d_s):
        s[i] = s[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])


@njit(cache=True)
def _state_ok(s):
    for i in range(s.shape[0]):
        if not math.isfinite(s[i]) or abs(s[i]) > DIVERGENCE_BOUND:
            return False
    return True


@njit(cache=True)
def family_rollout_batch(kind, a_mat, b_mat, coupling, w0m, c0n, wstack, s0, dt,
                         substeps, n_rec):
    n_pol = wstack.shape[0]
    d_s = s0.shape[0]
    d_a = c0n.shape[0]
    points = np.zeros((n_pol, n_rec, d_s))
    ok = np.ones(n_pol, dtype=np.bool_)
    k1 = np.empty(d_s)
    k2 = np.empty(d_s)
    k3 = np.empty(d_s)
    k4 = np.empty(d_s)
    tmp = np.empty(d_s)
    act = np.empty(d_a)
    s = np.empty(d_s)
    for p in range(n_pol):
        for i in range(d_s):
            s[i] = s0[i]
        alive = True
        for rec in range(n_rec):
            if alive:
                for _ in range(substeps):
                    _rk4_inplace(kind, a_mat, b_mat, coupling, MODE_FAMILY,
                                 w0m, c0n, wstack[p], s, dt, k1, k2, k3, k4, tmp, act)
                    if not _state_ok(s):
                        alive = False
                        ok[p] = False
                        break
            if alive:
                for i in range(d_s):
                    points[p, rec, i] = s[i]
    return points, ok


@njit(cache=True)
def _reward_s(reward_kind, s):
    if reward_kind == REWARD_NEG_SQ_NORM:
        acc = 0.0
        for i in range(s.shape[0]):
            acc += s[i] * s[i]
        return -acc
    return 0.0


@njit(cache=True)
def policy_value(kind, a_mat, b_mat, coupling, reward_kind, mode, w0m, c0n, wm,
                 s, t, horizon, lam, dt):
    duration = horizon - t
    m = max(1, int(round(duration / dt)))
    step = duration / m
    total = 0.0
    if reward_kind != REWARD_ZERO:
        total = 0.5 * math.exp(-2.0 * t / lam) * _reward_s(reward_kind, s)
    d_s = s.shape[0]
    d_a = c0n.shape[0]
    cur = s.copy()
    k1 = np.empty(d_s)
    k2 = np.empty(d_s)
    k3 = np.empty(d_s)
    k4 = np.empty(d_s)
    tmp = np.empty(d_s)
    act = np.empty(d_a)
    for i in range(1, m + 1):
        _rk4_inplace(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, cur, step,
                     k1, k2, k3, k4, tmp, act)
        if not _state_ok(cur):
            return np.nan, t + i * step
        if reward_kind != REWARD_ZERO:
            weight = math.exp(-(2.0 * t + i * step) / lam)
            frac = 0.5 if i == m else 1.0
            total += frac * weight * _reward_s(reward_kind, cur)
    return step * total, -1.0


@njit(cache=True)
def hold_then_value(kind, a_mat, b_mat, coupling, reward_kind, mode, w0m, c0n, wm,
                    s, a_const, t, h, horizon, lam, dt):
    m = max(1, int(round(h / dt)))
    step = h / m
    total = 0.0
    if reward_kind != REWARD_ZERO:
        total = 0.5 * math.exp(-t / lam) * _reward_s(reward_kind, s)
    d_s = s.shape[0]
    d_a = a_const.shape[0]
    drift_extra = np.zeros(d_s)
    for i in range(d_s):
        for j in range(d_a):
            drift_extra[i] += b_mat[i, j] * a_const[j]
    cur = s.copy()
    k1 = np.empty(d_s)
    k2 = np.empty(d_s)
    k3 = np.empty(d_s)
    k4 = np.empty(d_s)
    tmp = np.empty(d_s)
    for i in range(1, m + 1):
        _drift_into(kind, a_mat, coupling, cur, k1)
        for q in range(d_s):
            k1[q] += drift_extra[q]
            tmp[q] = cur[q] + 0.5 * step * k1[q]
        _drift_into(kind, a_mat, coupling, tmp, k2)
        for q in range(d_s):
            k2[q] += drift_extra[q]
            tmp[q] = cur[q] + 0.5 * step * k2[q]
        _drift_into(kind, a_mat, coupling, tmp, k3)
        for q in range(d_s):
            k3[q] += drift_extra[q]
            tmp[q] = cur[q] + step * k3[q]
        _drift_into(kind, a_mat, coupling, tmp, k4)
        for q in range(d_s):
            k4[q] += drift_extra[q]
            cur[q] = cur[q] + (step / 6.0) * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q])
        if not _state_ok(cur):
            return np.nan, t + i * step
        if reward_kind != REWARD_ZERO:
            weight = math.exp(-(i * step + t) / lam)
            frac = 0.5 if i == m else 1.0
            total += frac * weight * _reward_s(reward_kind, cur)
    tail, fail = policy_value(kind, a_mat, b_mat, coupling, reward_kind, mode,
                              w0m, c0n, wm, cur, t + h, horizon, lam, dt)
    if fail >= 0.0:
        return np.nan, fail
    return step * total + tail, -1.0


@njit(cache=True)
def sde_rollout(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, s0, dt, noise,
                sigma_scale):
    n_steps = noise.shape[0]
    d_s = s0.shape[0]
    d_a = c0n.shape[0]
    states = np.zeros((n_steps + 1, d_s))
    for i in range(d_s):
        states[0, i] = s0[i]
    sqdt = math.sqrt(dt)
    cur = s0.copy()
    deriv = np.empty(d_s)
    act = np.empty(d_a)
    for i in range(n_steps):
        _closed_loop_into(kind, a_mat, b_mat, coupling, mode, w0m, c0n, wm, cur,
                          act, deriv)
        for q in range(d_s):
            cur[q] = cur[q] + dt * deriv[q] + sqdt * sigma_scale * noise[i, q]
        if not _state_ok(cur):
            return states, (i + 1) * dt
        for q in range(d_s):
            states[i + 1, q] = cur[q]
    return states, -1.0


@njit(cache=True)
def two_nn_brute(points):
    n, d = points.shape
    r1 = np.empty(n)
    r2 = np.empty(n)
    for i in range(n):
        best1 = np.inf
        best2 = np.inf
        for j in range(n):
            if j == i:
                continue
            sq = 0.0
            for k in range(d):
                diff = points[i, k] - points[j, k]
                sq += diff * diff
            if sq < best1:
                best2 = best1
                best1 = sq
            elif sq < best2:
                best2 = sq
        r1[i] = math.sqrt(best1)
        r2[i] = math.sqrt(best2)
    return r1, r2
