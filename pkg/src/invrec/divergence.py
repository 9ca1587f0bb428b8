"""Distribution-distance penalties: squared MMD with a Gaussian kernel and
CORAL, each with analytic gradients with respect to the input rows.

MMD uses the biased V-statistic (guaranteed nonnegative); CORAL is the
squared Frobenius distance between unbiased sample covariances, scaled by
1/d^2. Bandwidths are treated as constants during differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform


class DivergenceError(Exception):
    pass


@dataclass(frozen=True)
class KernelSpec:
    """Gaussian kernel k(s, t) = exp(-||s - t||^2 / (2 sigma^2)).

    ``bandwidth`` is either a positive float or the string "median" for the
    median pairwise-distance heuristic over the pooled rows.
    """

    bandwidth: float | str = "median"

    def __post_init__(self):
        if isinstance(self.bandwidth, str):
            if self.bandwidth != "median":
                raise DivergenceError(f"unknown bandwidth policy {self.bandwidth!r}")
        elif not self.bandwidth > 0:
            raise DivergenceError("explicit bandwidth must be positive")

    def resolve(self, pooled: np.ndarray) -> float:
        if isinstance(self.bandwidth, str):
            return median_bandwidth(pooled)
        return float(self.bandwidth)


def _as_matrix(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DivergenceError("sample matrices must be 2-D (rows are vectors)")
    if not np.all(np.isfinite(a)):
        raise DivergenceError("sample matrices must be finite")
    return a


def median_bandwidth(pooled, max_rows: int = 2000, seed: int = 0) -> float:
    """Median pairwise Euclidean distance over the pooled rows.

    Exact up to ``max_rows`` rows; above that a fixed-seed subsample is used.
    """
    pooled = _as_matrix(pooled)
    if pooled.shape[0] < 2:
        raise DivergenceError("median bandwidth needs at least two rows")
    if pooled.shape[0] > max_rows:
        rng = np.random.default_rng(seed)
        pooled = pooled[rng.choice(pooled.shape[0], size=max_rows, replace=False)]
    dists = pdist(pooled)
    med = float(np.median(dists))
    if med <= 0:
        # duplicated rows can drag the median to zero; fall back to the
        # median of the strictly positive distances
        positive = dists[dists > 0]
        if positive.size == 0:
            raise DivergenceError("all rows identical: zero median bandwidth")
        med = float(np.median(positive))
    return med


def _gaussian_gram(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    sq = (
        np.sum(a * a, axis=1)[:, None]
        + np.sum(b * b, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-sq / (2.0 * sigma * sigma))


def mmd2(a, b, kernel: KernelSpec = KernelSpec()) -> float:
    """Biased (V-statistic) squared MMD between two sample matrices."""
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise DivergenceError(
            f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    sigma = kernel.resolve(np.vstack([a, b]))
    n, m = a.shape[0], b.shape[0]
    kaa = _gaussian_gram(a, a, sigma).sum() / (n * n)
    kbb = _gaussian_gram(b, b, sigma).sum() / (m * m)
    kab = _gaussian_gram(a, b, sigma).sum() / (n * m)
    return float(kaa + kbb - 2.0 * kab)


def grad_mmd2(a, b, kernel: KernelSpec = KernelSpec()) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the biased squared-MMD estimator with respect to
    the rows of a and b (bandwidth held constant)."""
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise DivergenceError(
            f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    sigma = kernel.resolve(np.vstack([a, b]))
    inv = 1.0 / (sigma * sigma)
    n, m = a.shape[0], b.shape[0]

    kaa = _gaussian_gram(a, a, sigma)
    kbb = _gaussian_gram(b, b, sigma)
    kab = _gaussian_gram(a, b, sigma)

    # d k(s, t) / d s = -(s - t) / sigma^2 * k(s, t)
    def pair_grad(x, y, k, scale):
        # gradient wrt rows of x of scale * sum_ij k(x_i, y_j)
        w = k * scale * inv
        return -(x * w.sum(axis=1)[:, None] - w @ y)

    ga = 2.0 * pair_grad(a, a, kaa, 1.0 / (n * n))
    ga += pair_grad(a, b, kab, -2.0 / (n * m))
    gb = 2.0 * pair_grad(b, b, kbb, 1.0 / (m * m))
    gb += pair_grad(b, a, kab.T, -2.0 / (n * m))
    return ga, gb


def _covariance(x: np.ndarray) -> np.ndarray:
    n = x.shape[0]
    centered = x - x.mean(axis=0, keepdims=True)
    return centered.T @ centered / (n - 1)


def coral(a, b) -> float:
    """Squared Frobenius distance between unbiased sample covariances,
    scaled by 1/d^2."""
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise DivergenceError(
            f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise DivergenceError("coral needs at least two rows per side")
    d = a.shape[1]
    diff = _covariance(a) - _covariance(b)
    return float(np.sum(diff * diff) / (d * d))


def grad_coral(a, b) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradient of the CORAL value with respect to the rows of a
    and b."""
    a, b = _as_matrix(a), _as_matrix(b)
    if a.shape[1] != b.shape[1]:
        raise DivergenceError(
            f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}"
        )
    if a.shape[0] < 2 or b.shape[0] < 2:
        raise DivergenceError("coral needs at least two rows per side")
    d = a.shape[1]
    diff = _covariance(a) - _covariance(b)

    def side_grad(x, sign):
        n = x.shape[0]
        centered = x - x.mean(axis=0, keepdims=True)
        g = sign * (4.0 / (d * d * (n - 1))) * (centered @ diff)
        return g - g.mean(axis=0, keepdims=True)

    return side_grad(a, +1.0), side_grad(b, -1.0)


def gaussian_kernel_matrix(pooled, sigma: float) -> np.ndarray:
    """Full Gram matrix over pooled rows; used by permutation tests."""
    pooled = _as_matrix(pooled)
    sq = squareform(pdist(pooled, "sqeuclidean"))
    return np.exp(-sq / (2.0 * sigma * sigma))


def mmd2_from_gram(gram: np.ndarray, in_a: np.ndarray) -> float:
    """Squared-MMD V-statistic from a precomputed pooled Gram matrix, where
    ``in_a`` is a boolean row mask for the first sample."""
    in_b = ~in_a
    n = int(in_a.sum())
    m = int(in_b.sum())
    if n == 0 or m == 0:
        raise DivergenceError("both samples must be nonempty")
    kaa = gram[np.ix_(in_a, in_a)].sum() / (n * n)
    kbb = gram[np.ix_(in_b, in_b)].sum() / (m * m)
    kab = gram[np.ix_(in_a, in_b)].sum() / (n * m)
    return float(kaa + kbb - 2.0 * kab)
