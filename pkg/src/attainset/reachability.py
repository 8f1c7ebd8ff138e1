"""Linear-system reachability via the Kalman controllability matrix."""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "LinearSystem",
    "ControllabilityReport",
    "controllability_matrix",
    "is_fully_reachable",
]

DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class LinearSystem:
    """Matrices of ds/dt = A s + B a."""

    a_mat: np.ndarray
    b_mat: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a_mat, dtype=float)
        b = np.asarray(self.b_mat, dtype=float)
        if b.ndim == 1:
            b = b[:, None]
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("A must be square")
        if b.shape[0] != a.shape[0]:
            raise ValueError("B must have as many rows as A")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise ValueError("matrices must be finite")
        object.__setattr__(self, "a_mat", a)
        object.__setattr__(self, "b_mat", b)

    @property
    def d_s(self):
        return self.a_mat.shape[0]

    @property
    def d_a(self):
        return self.b_mat.shape[1]


@dataclass(frozen=True)
class ControllabilityReport:
    """Numerical rank of the controllability matrix and its spectrum.

    full is True exactly when rank equals the state dimension.
    """

    rank: int
    full: bool
    singular_values: np.ndarray


def controllability_matrix(sys):
    """[B, AB, A^2 B, ..., A^(d_s - 1) B] by repeated multiplication."""
    a, b = sys.a_mat, sys.b_mat
    d_s, d_a = sys.d_s, sys.d_a
    ctrb = np.zeros((d_s, d_s * d_a))
    ctrb[:, :d_a] = b
    for k in range(1, d_s):
        ctrb[:, k * d_a:(k + 1) * d_a] = a @ ctrb[:, (k - 1) * d_a:k * d_a]
    if not np.all(np.isfinite(ctrb)):
        raise OverflowError("controllability matrix overflowed (ill-conditioned A)")
    return ctrb


def is_fully_reachable(sys, tol=DEFAULT_RANK_TOL):
    """Rank test: count singular values above tol * sigma_max * max(dims)."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    ctrb = controllability_matrix(sys)
    try:
        svals = np.linalg.svd(ctrb, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"SVD failed on controllability matrix: {exc}")
    if svals.size and svals[0] > 0:
        threshold = tol * svals[0] * max(ctrb.shape)
        rank = int(np.sum(svals > threshold))
    else:
        rank = 0
    return ControllabilityReport(rank=rank, full=rank == sys.d_s,
                                 singular_values=svals)
