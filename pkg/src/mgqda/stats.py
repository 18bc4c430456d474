"""Group-wise sample statistics for labeled multivariate data.

Computes per-group means and covariances, the count-weighted between-group
covariance, and its low-rank contrast factor: a p x (G-1) matrix ``gamma``
of successive group-mean contrasts whose Gram product reproduces the
between-group covariance exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .exceptions import InsufficientGroupSize, InvalidInput
from .linalg import symmetrize

COV_MODES = ("ml", "sample")


@dataclass
class Dataset:
    """A labeled sample: rows of ``x`` carry integer group labels ``1..G`` in ``y``."""

    x: NDArray
    y: NDArray
    feature_names: list[str] | None = None

    def __post_init__(self) -> None:
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.x.ndim != 2:
            raise InvalidInput(f"Dataset: x must be 2-d, got shape {self.x.shape}")
        if self.y.shape != (self.x.shape[0],):
            raise InvalidInput(
                f"Dataset: y must have shape ({self.x.shape[0]},), got {self.y.shape}"
            )

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def g_count(self) -> int:
        return int(self.y.max()) if self.y.size else 0


@dataclass
class GroupStats:
    """Sample statistics of a grouped dataset.

    ``covariances[g]`` is group ``g``'s covariance (0-based group index),
    ``between`` the count-weighted between-group covariance, and ``gamma``
    its contrast factor with ``gamma @ gamma.T == between`` up to round-off.
    """

    g_count: int
    counts: NDArray
    priors: NDArray
    means: NDArray
    grand_mean: NDArray
    covariances: NDArray
    between: NDArray
    gamma: NDArray
    cov_mode: str

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    @property
    def p(self) -> int:
        return self.means.shape[1]


def compute_group_stats(data: Dataset, cov_mode: str = "ml") -> GroupStats:
    """Compute per-group and between-group statistics.

    Parameters
    ----------
    data : Dataset
        Labels must cover ``1..G`` with every group appearing at least twice.
    cov_mode : {"ml", "sample"}
        Covariance divisor: ``n_g`` ("ml") or ``n_g - 1`` ("sample").

    Raises
    ------
    InvalidInput
        On non-finite features, labels outside ``1..G``, or a bad ``cov_mode``.
    InsufficientGroupSize
        If any group in ``1..G`` has fewer than two observations.
    """
    if cov_mode not in COV_MODES:
        raise InvalidInput(f"cov_mode must be one of {COV_MODES}, got {cov_mode!r}")
    if not np.all(np.isfinite(data.x)):
        raise InvalidInput("compute_group_stats: x contains non-finite entries")
    if data.n == 0:
        raise InvalidInput("compute_group_stats: empty dataset")
    if data.y.min() < 1:
        raise InvalidInput("compute_group_stats: labels must be integers >= 1")

    g_count = data.g_count
    if g_count < 2:
        raise InvalidInput("compute_group_stats: at least two groups required")
    p = data.p
    counts = np.bincount(data.y, minlength=g_count + 1)[1:].astype(np.int64)
    for g in range(g_count):
        if counts[g] < 2:
            raise InsufficientGroupSize(
                f"group {g + 1} has {counts[g]} observations; at least 2 required"
            )

    n = data.n
    priors = counts / n
    means = np.zeros((g_count, p))
    covariances = np.zeros((g_count, p, p))
    for g in range(g_count):
        rows = data.x[data.y == g + 1]
        means[g] = rows.mean(axis=0)
        centered = rows - means[g]
        divisor = counts[g] if cov_mode == "ml" else counts[g] - 1
        covariances[g] = symmetrize(centered.T @ centered / divisor)

    grand_mean = priors @ means
    between = np.zeros((p, p))
    for g in range(g_count):
        d = means[g] - grand_mean
        between += priors[g] * np.outer(d, d)
    between = symmetrize(between)

    gamma = compute_gamma(counts, means)
    return GroupStats(
        g_count=g_count,
        counts=counts,
        priors=priors,
        means=means,
        grand_mean=grand_mean,
        covariances=covariances,
        between=between,
        gamma=gamma,
        cov_mode=cov_mode,
    )


def compute_gamma(counts, means) -> NDArray:
    """Contrast factor of the between-group covariance.

    Column ``r`` (0-based, ``r = 0..G-2``) contrasts the count-weighted mean
    of groups ``1..r+1`` against group ``r+2``'s mean:

        gamma_r = sqrt(n_{r+2}) * sum_{i<=r+1} n_i (mean_i - mean_{r+2})
                  / sqrt(n * (sum_{i<=r+1} n_i) * (sum_{i<=r+2} n_i))

    so that ``gamma @ gamma.T`` equals the count-weighted between-group
    covariance exactly.

    Parameters
    ----------
    counts : array-like, shape (G,)
        Positive per-group counts.
    means : array-like, shape (G, p)
        Per-group means, ordered by group label.

    Returns
    -------
    ndarray, shape (p, G - 1)
    """
    counts = np.asarray(counts, dtype=float)
    means = np.asarray(means, dtype=float)
    if counts.ndim != 1 or means.ndim != 2 or means.shape[0] != counts.shape[0]:
        raise InvalidInput("compute_gamma: counts and means shapes are inconsistent")
    if np.any(counts <= 0):
        raise InvalidInput("compute_gamma: counts must be positive")
    g_count = counts.shape[0]
    p = means.shape[1]
    n = counts.sum()
    gamma = np.zeros((p, max(g_count - 1, 0)))
    cum_counts = np.cumsum(counts)
    cum_weighted = np.cumsum(counts[:, None] * means, axis=0)
    for r in range(1, g_count):
        numer = np.sqrt(counts[r]) * (cum_weighted[r - 1] - cum_counts[r - 1] * means[r])
        denom = np.sqrt(n * cum_counts[r - 1] * cum_counts[r])
        gamma[:, r - 1] = numer / denom
    return gamma


def gram_products(stats: GroupStats) -> NDArray:
    """Per-group working matrices ``M_g = covariances[g] + gamma @ gamma.T``.

    Returns
    -------
    ndarray, shape (G, p, p)
        Exactly symmetric stack.
    """
    low_rank = symmetrize(stats.gamma @ stats.gamma.T)
    return stats.covariances + low_rank[None, :, :]


__all__ = [
    "COV_MODES",
    "Dataset",
    "GroupStats",
    "compute_group_stats",
    "compute_gamma",
    "gram_products",
]
