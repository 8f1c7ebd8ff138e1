"""Two-layer policies: canonical, linearised, and the bounded family.

A width-n network maps a state s to an action through

    f(s; W, C) = (1/sqrt(n)) sum_k C_k gelu(W_k . s),

with the output weights C fixed after initialisation and only the
first-layer vector W (n blocks of length d_s) trained. Around the
initial W0 the tangent feature matrix

    Phi(s; W0) = (1/sqrt(n)) [C_1 gelu'(W0_1 . s) s^T, ...]

defines both the linearised policy f(s; W0) + Phi(s; W0)(W - W0) and the
bounded family {Phi(s; W0) W : ||W - W0|| <= r}. The family form is the
one closed-loop fields and attained-set studies use; the linearised
(affine) form is the one training updates.
"""

from dataclasses import dataclass

import numpy as np

from .activation import gelu, gelu_prime, gelu_second

__all__ = [
    "TwoLayerParams",
    "FamilySpec",
    "TwoLayerPolicy",
    "init_params",
    "forward_canonical",
    "forward_family",
    "forward_linearised",
    "feature_matrix",
    "policy_jacobian",
    "canonical_state_jacobian",
    "linearised_state_jacobian",
    "sample_family",
    "save_params",
    "load_params",
]


@dataclass
class TwoLayerParams:
    """Width, dimensions and weights of one two-layer policy.

    w0 and w are flat vectors of length n * d_s laid out in blocks of
    length d_s per hidden unit; c0 is the fixed d_a x n output matrix.
    """

    n: int
    d_s: int
    d_a: int
    w0: np.ndarray
    c0: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.d_s < 1 or self.d_a < 1:
            raise ValueError("n, d_s, d_a must all be >= 1")
        self.w0 = np.asarray(self.w0, dtype=float).reshape(self.n * self.d_s)
        self.w = np.asarray(self.w, dtype=float).reshape(self.n * self.d_s)
        self.c0 = np.asarray(self.c0, dtype=float).reshape(self.d_a, self.n)
        if not (np.all(np.isfinite(self.w0)) and np.all(np.isfinite(self.w))
                and np.all(np.isfinite(self.c0))):
            raise ValueError("parameters must be finite")

    @property
    def w0_blocks(self):
        """Initial first-layer weights as an (n, d_s) matrix."""
        return self.w0.reshape(self.n, self.d_s)

    @property
    def w_blocks(self):
        """Current first-layer weights as an (n, d_s) matrix."""
        return self.w.reshape(self.n, self.d_s)

    @property
    def c0_scaled(self):
        """Output weights divided by sqrt(n), the form the kernels take."""
        return self.c0 / np.sqrt(self.n)

    def with_w(self, w):
        """Copy of these parameters with a new current weight vector."""
        return TwoLayerParams(self.n, self.d_s, self.d_a,
                              self.w0.copy(), self.c0.copy(),
                              np.asarray(w, dtype=float).copy())


@dataclass(frozen=True)
class FamilySpec:
    """Bounded family around a base initialisation: ||W - W0|| <= radius."""

    radius: float
    width: int
    base: TwoLayerParams

    def __post_init__(self):
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise ValueError("radius must be positive and finite")
        if self.width != self.base.n:
            raise ValueError("width must match the base parameters")


def init_params(n, d_s, d_a, rng_seed):
    """Draw fresh parameters: C0 ~ Unif(-1, 1), W0 blocks ~ N(0, I/d_s).

    W starts equal to W0. The draw order (C0 first, then W0) is fixed so
    a seed pins the parameters exactly.
    """
    if n < 1 or d_s < 1 or d_a < 1:
        raise ValueError("n, d_s, d_a must all be >= 1")
    rng = np.random.default_rng(rng_seed)
    c0 = rng.uniform(-1.0, 1.0, size=(d_a, n))
    w0 = rng.normal(0.0, 1.0 / np.sqrt(d_s), size=n * d_s)
    return TwoLayerParams(n=n, d_s=d_s, d_a=d_a, w0=w0, c0=c0, w=w0.copy())


def _check_state(p, s):
    s = np.asarray(s, dtype=float).reshape(-1)
    if s.shape[0] != p.d_s:
        raise ValueError(f"state has length {s.shape[0]}, expected {p.d_s}")
    return s


def forward_canonical(p, s):
    """Network output at the current weights: (1/sqrt(n)) sum C_k gelu(W_k . s)."""
    s = _check_state(p, s)
    z = p.w_blocks @ s
    return p.c0_scaled @ gelu(z)


def forward_family(p, s):
    """Family-form output Phi(s; W0) W (no offset)."""
    s = _check_state(p, s)
    z0 = p.w0_blocks @ s
    return p.c0_scaled @ (gelu_prime(z0) * (p.w_blocks @ s))


def forward_linearised(p, s):
    """Linearised output f(s; W0) + Phi(s; W0)(W - W0); affine in W."""
    s = _check_state(p, s)
    z0 = p.w0_blocks @ s
    dw = p.w_blocks - p.w0_blocks
    return p.c0_scaled @ (gelu(z0) + gelu_prime(z0) * (dw @ s))


def feature_matrix(p, s):
    """Tangent feature matrix Phi(s; W0), shape d_a x (n * d_s).

    Block k is (1/sqrt(n)) C0_k gelu'(W0_k . s) s^T.
    """
    s = _check_state(p, s)
    z0 = p.w0_blocks @ s
    scaled = p.c0_scaled * gelu_prime(z0)  # (d_a, n)
    phi = scaled[:, :, None] * s[None, None, :]
    return phi.reshape(p.d_a, p.n * p.d_s)


def policy_jacobian(p, s):
    """State Jacobian of the family form, shape d_a x d_s.

    Entry (j, k) = (1/sqrt(n)) sum_kappa C0[j, kappa] *
    (gelu'(z0) W[kappa, k] + gelu''(z0) W0[kappa, k] (s . W_kappa)).
    """
    s = _check_state(p, s)
    w0m = p.w0_blocks
    wm = p.w_blocks
    z0 = w0m @ s
    c = p.c0_scaled
    first = (c * gelu_prime(z0)) @ wm
    second = (c * (gelu_second(z0) * (wm @ s))) @ w0m
    return first + second


def canonical_state_jacobian(p, s, at_w0=False):
    """State Jacobian of the canonical network (at W, or at W0)."""
    s = _check_state(p, s)
    wm = p.w0_blocks if at_w0 else p.w_blocks
    z = wm @ s
    return (p.c0_scaled * gelu_prime(z)) @ wm


def linearised_state_jacobian(p, s):
    """State Jacobian of the linearised policy.

    Sum of the canonical Jacobian at W0 and the family-form Jacobian of
    the displacement W - W0 (the feature matrix depends on s).
    """
    s = _check_state(p, s)
    w0m = p.w0_blocks
    dwm = p.w_blocks - w0m
    z0 = w0m @ s
    c = p.c0_scaled
    base = (c * gelu_prime(z0)) @ w0m
    disp = (c * gelu_prime(z0)) @ dwm + (c * (gelu_second(z0) * (dwm @ s))) @ w0m
    return base + disp


def sample_family(spec, rng_seed):
    """Uniform draw from the L2 ball ||W - W0|| <= radius.

    Gaussian direction, radius scaled by u^(1/D) with u ~ Unif(0, 1);
    returns the flat weight vector of length n * d_s.
    """
    base = spec.base
    dim = base.n * base.d_s
    rng = np.random.default_rng(rng_seed)
    direction = rng.normal(size=dim)
    direction /= np.linalg.norm(direction)
    u = rng.uniform()
    return base.w0 + spec.radius * u ** (1.0 / dim) * direction


class TwoLayerPolicy:
    """Callable state -> action view of TwoLayerParams.

    mode is one of 'family', 'linearised', 'canonical'.
    """

    _FORWARD = {
        "family": forward_family,
        "linearised": forward_linearised,
        "canonical": forward_canonical,
    }
    _JACOBIAN = {
        "family": policy_jacobian,
        "linearised": linearised_state_jacobian,
        "canonical": canonical_state_jacobian,
    }

    def __init__(self, params, mode="family"):
        if mode not in self._FORWARD:
            raise ValueError(f"unknown policy mode {mode!r}")
        self.params = params
        self.mode = mode

    def __call__(self, s):
        return self._FORWARD[self.mode](self.params, s)

    def state_jacobian(self, s):
        return self._JACOBIAN[self.mode](self.params, s)


def save_params(p, path):
    """Persist parameters to a binary .npz file."""
    np.savez(path, n=p.n, d_s=p.d_s, d_a=p.d_a, w0=p.w0, c0=p.c0, w=p.w)


def load_params(path):
    """Load parameters written by :func:`save_params`."""
    data = np.load(path)
    return TwoLayerParams(n=int(data["n"]), d_s=int(data["d_s"]),
                          d_a=int(data["d_a"]), w0=data["w0"],
                          c0=data["c0"], w=data["w"])
