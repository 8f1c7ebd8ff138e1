"""TWO-NN intrinsic dimension estimation with subsample confidence
intervals.

For each point the ratio mu = r2/r1 of the distances to its two nearest
neighbors follows, on a d-dimensional manifold with locally uniform
sampling, a Pareto law with exponent d. Sorting the ratios and fitting
a line through the origin to (log mu_i, -log(1 - F_i)) with F the
empirical CDF recovers d as the slope. Confidence intervals come from
repeating the fit on random subsamples.
"""

import csv
import json
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import kernels
from .errors import DegenerateRatiosError

__all__ = [
    "PointCloud",
    "DimensionEstimate",
    "neighbor_distances",
    "two_nn_ratios",
    "fit_dimension",
    "estimate_with_ci",
    "load_cloud_csv",
]

BRUTE_FORCE_LIMIT = 20_000


@dataclass(frozen=True)
class PointCloud:
    """Deduplicated finite points of common dimension, N >= 3."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError("points must be a 2-D array (N, d)")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        pts = np.unique(pts, axis=0)  # drop exact (bitwise-equal) duplicates
        if pts.shape[0] < 3:
            raise ValueError("need at least 3 distinct points")
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


@dataclass(frozen=True)
class DimensionEstimate:
    """TWO-NN point estimate with a normal-theory confidence interval."""

    d_hat: float
    ci_low: float
    ci_high: float
    subsamples: int
    subsample_size: int

    def __post_init__(self):
        if not self.ci_low <= self.d_hat <= self.ci_high:
            raise ValueError("interval must bracket the estimate")

    def to_json(self, n=None, params=None):
        record = {"d_hat": self.d_hat, "ci_low": self.ci_low,
                  "ci_high": self.ci_high, "n": n,
                  "params": {"subsamples": self.subsamples,
                             "subsample_size": self.subsample_size}}
        if params:
            record["params"].update(params)
        return json.dumps(record, sort_keys=True)


def neighbor_distances(points):
    """(r1, r2) distances to the first and second nearest neighbors.

    Exact brute force up to BRUTE_FORCE_LIMIT points, a k-d tree above;
    ties at the second neighbor are broken by smallest index, which
    leaves the distances themselves unchanged.
    """
    points = np.ascontiguousarray(points, dtype=float)
    if points.shape[0] <= BRUTE_FORCE_LIMIT:
        return kernels.two_nn_brute(points)
    tree = cKDTree(points)
    dists, _ = tree.query(points, k=3)
    return dists[:, 1].copy(), dists[:, 2].copy()


def two_nn_ratios(cloud):
    """Ratios mu_i = r2/r1 for every point of the cloud; all >= 1."""
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(np.asarray(cloud))
    r1, r2 = neighbor_distances(cloud.points)
    if np.any(r1 == 0.0):
        raise ValueError("zero nearest-neighbor distance after deduplication")
    return r2 / r1


def fit_dimension(mus, trim_fraction=0.0):
    """Slope through the origin of (-log(1 - F)) against log mu.

    Sorts the ratios ascending, uses the empirical CDF F_i = i/(N+1)
    (finite at the top point), optionally drops the largest
    trim_fraction of ratios, and returns sum(xy)/sum(x^2).
    """
    mus = np.asarray(mus, dtype=float)
    if mus.size == 0:
        raise ValueError("no ratios to fit")
    if not 0 <= trim_fraction < 0.5:
        raise ValueError("trim_fraction must lie in [0, 0.5)")
    n = mus.size
    mus = np.sort(mus)
    x = np.log(mus)
    y = -np.log1p(-np.arange(1, n + 1) / (n + 1.0))
    keep = n - int(np.floor(trim_fraction * n))
    x = x[:keep]
    y = y[:keep]
    denom = float(x @ x)
    if denom == 0.0:
        raise DegenerateRatiosError("all ratios equal 1; zero x-variance")
    return float(x @ y) / denom


def estimate_with_ci(cloud, subsamples, subsample_size, trim_fraction=0.0,
                     rng_seed=0):
    """Mean TWO-NN estimate over random subsamples, with a 1.96-sigma CI."""
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(np.asarray(cloud))
    n = len(cloud)
    if subsample_size > n:
        raise ValueError(f"subsample_size {subsample_size} exceeds cloud size {n}")
    if subsamples < 1:
        raise ValueError("need at least one subsample")
    rng = np.random.default_rng(rng_seed)
    fits = np.empty(subsamples)
    for i in range(subsamples):
        idx = rng.choice(n, size=subsample_size, replace=False)
        mus = two_nn_ratios(PointCloud(cloud.points[idx]))
        fits[i] = fit_dimension(mus, trim_fraction)
    d_hat = float(np.mean(fits))
    if subsamples == 1:
        half = 0.0
    else:
        half = 1.96 * float(np.std(fits, ddof=1)) / np.sqrt(subsamples)
    return DimensionEstimate(d_hat=d_hat, ci_low=d_hat - half,
                             ci_high=d_hat + half, subsamples=subsamples,
                             subsample_size=subsample_size)


def load_cloud_csv(path):
    """Point cloud from a CSV file, one point per row.

    A leading non-numeric row is treated as a header. Malformed rows
    are rejected with their line numbers.
    """
    rows = []
    bad_lines = []
    width = None
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                if lineno == 1:
                    continue  # header
                bad_lines.append(lineno)
                continue
            if width is None:
                width = len(values)
            elif len(values) != width:
                bad_lines.append(lineno)
                continue
            rows.append(values)
    if bad_lines:
        raise ValueError(f"malformed CSV rows at lines {bad_lines}")
    if not rows:
        raise ValueError(f"no points found in {path}")
    return PointCloud(np.asarray(rows, dtype=float))
