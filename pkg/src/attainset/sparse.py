"""Forward pass of the residual sparsification layer.

One layer computes ReLU(z + alpha * W^T (z - W z) - alpha * lambda1):
a residual correction toward the dictionary span followed by a uniform
soft shift-threshold. Only the forward transform lives here; training
it inside an RL stack is out of scope.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["SparseLayer", "sparse_forward", "sparsity_fraction", "load_layer_csv"]


@dataclass(frozen=True)
class SparseLayer:
    """Width-n layer: weight (n, n), step size alpha, threshold lambda1.

    lambda1 is a scalar by default; a per-coordinate vector of length n
    is accepted as an explicit override.
    """

    width: int
    weight: np.ndarray
    alpha: float
    lambda1: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weight, dtype=float)
        lam = np.atleast_1d(np.asarray(self.lambda1, dtype=float))
        if w.shape != (self.width, self.width):
            raise ValueError(f"weight must be {self.width} x {self.width}")
        if lam.shape not in ((1,), (self.width,)):
            raise ValueError("lambda1 must be a scalar or length-n vector")
        if self.alpha < 0 or np.any(lam < 0):
            raise ValueError("alpha and lambda1 must be non-negative")
        if not (np.all(np.isfinite(w)) and np.isfinite(self.alpha)
                and np.all(np.isfinite(lam))):
            raise ValueError("layer parameters must be finite")
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "lambda1", lam)


def sparse_forward(layer, z):
    """Apply the layer to a vector (n,) or a batch (n, m), column-wise."""
    z = np.asarray(z, dtype=float)
    vector = z.ndim == 1
    if vector:
        z = z[:, None]
    if z.shape[0] != layer.width:
        raise ValueError(f"input has {z.shape[0]} rows, expected {layer.width}")
    w = layer.weight
    r = z + layer.alpha * (w.T @ (z - w @ z)) - layer.alpha * layer.lambda1[:, None]
    out = np.maximum(r, 0.0)
    return out[:, 0] if vector else out


def sparsity_fraction(z):
    """Fraction of exactly-zero entries."""
    z = np.asarray(z)
    if z.size == 0:
        return 1.0
    return float(np.count_nonzero(z == 0) / z.size)


def load_layer_csv(path, alpha, lambda1):
    """SparseLayer with the weight matrix read from a CSV file."""
    weight = np.loadtxt(path, delimiter=",", ndmin=2)
    return SparseLayer(width=weight.shape[0], weight=weight, alpha=alpha,
                       lambda1=lambda1)
