"""Synthetic point clouds with known intrinsic dimension.

Ground-truth fixtures for exercising the TWO-NN estimator: a segment
embedded in a high-dimensional space by a random isometry, the flat
torus in R^4 (uniform by construction), and solid unit cubes.
"""

import numpy as np

__all__ = ["line_cloud", "torus_cloud", "cube_cloud", "save_cloud_csv"]


def line_cloud(n, ambient=10, rng_seed=0, noise=0.0):
    """Uniform samples on a segment mapped into R^ambient by a random
    orthonormal direction plus offset; intrinsic dimension 1."""
    rng = np.random.default_rng(rng_seed)
    direction = rng.normal(size=ambient)
    direction /= np.linalg.norm(direction)
    offset = rng.normal(size=ambient)
    t = rng.uniform(0.0, 1.0, size=n)
    pts = offset[None, :] + t[:, None] * direction[None, :]
    if noise > 0:
        pts = pts + noise * rng.normal(size=pts.shape)
    return pts


def torus_cloud(n, rng_seed=0):
    """Uniform samples on the flat 2-torus (cos u, sin u, cos v, sin v)
    in R^4; intrinsic dimension 2, sampling exactly uniform."""
    rng = np.random.default_rng(rng_seed)
    u = rng.uniform(0.0, 2.0 * np.pi, size=n)
    v = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.stack([np.cos(u), np.sin(u), np.cos(v), np.sin(v)], axis=1)


def cube_cloud(n, dim, rng_seed=0):
    """Uniform samples in the solid unit cube [0, 1]^dim."""
    rng = np.random.default_rng(rng_seed)
    return rng.uniform(0.0, 1.0, size=(n, dim))


def save_cloud_csv(points, path):
    """Write a cloud as CSV, one point per row, LF line endings."""
    points = np.asarray(points, dtype=float)
    with open(path, "w", newline="\n") as fh:
        for row in points:
            fh.write(",".join(repr(float(x)) for x in row) + "\n")
