"""Penalty selection by stratified K-fold cross-validation.

The penalty grid is computed once from the full data, each fold fits the
whole descending grid with warm starts, and the grid point with the lowest
mean validation error wins; exact ties go to the larger penalty.  The final
model is refit on the full data at the selected penalty.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .classifier import FittedModel, build_model, predict
from .exceptions import InvalidInput
from .solver import PenaltySpec,fit, fit_path, lambda_path
from .stats import Dataset, compute_group_stats


@dataclass(frozen=True)
class CvConfig:
    """Cross-validation controls: folds, grid shape, penalty mix, solver tols."""

    folds: int = 5
    n_lambda: int = 30
    ratio: float = 0.01
    alpha: float = 0.5
    stratified: bool = True
    cov_mode: str = "ml"
    tol: float = 1e-6
    max_sweeps: int = 1000
    root_tol: float = 1e-10

    def __post_init__(self) -> None:
        if self.folds < 2:
            raise InvalidInput(f"folds must be at least 2, got {self.folds}")
        if self.n_lambda < 2:
            raise InvalidInput(f"n_lambda must be at least 2, got {self.n_lambda}")
        if not 0 < self.ratio < 1:
            raise InvalidInput(f"ratio must be in (0, 1), got {self.ratio}")
        if not 0 < self.alpha <= 1:
            raise InvalidInput(f"alpha must be in (0, 1], got {self.alpha}")


@dataclass
class CvResult:
    """Chosen penalty, per-grid-point diagnostics, and the refit model."""

    best_lambda: float
    best_error: float
    lambdas: NDArray
    mean_errors: NDArray
    mean_support_sizes: NDArray
    model: FittedModel


def _fold_assignment(y: NDArray, folds: int, stratified: bool) -> NDArray:
    """Fold index per row: round-robin within each group when stratified."""
    n = y.shape[0]
    assignment = np.empty(n, dtype=np.int64)
    if stratified:
        for g in np.unique(y):
            idx = np.flatnonzero(y == g)
            assignment[idx] = np.arange(idx.size) % folds
    else:
        assignment = np.arange(n) % folds
    return assignment


def cross_validate(
    data: Dataset,
    config: CvConfig = CvConfig(),
    labels: list | None = None,
    feature_names: list[str] | None = None,
) -> CvResult:
    """Select the penalty level by K-fold cross-validated test error.

    Requires every group to keep at least two observations in each fold's
    training part.  Returns the refit full-data model along with per-grid
    mean errors and mean support sizes.
    """
    full_stats = compute_group_stats(data, cov_mode=config.cov_mode)
    if config.folds > int(full_stats.counts.min()):
        raise InvalidInput(
            f"folds={config.folds} exceeds the smallest group size "
            f"{int(full_stats.counts.min())}"
        )
    lambdas = lambda_path(full_stats, config.alpha, config.n_lambda, config.ratio)
    assignment = _fold_assignment(data.y, config.folds, config.stratified)

    errors = np.zeros((config.folds, lambdas.size))
    support_sizes = np.zeros((config.folds, lambdas.size))
    for fold in range(config.folds):
        held_out = assignment == fold
        train = Dataset(data.x[~held_out], data.y[~held_out])
        valid_x = data.x[held_out]
        valid_y = data.y[held_out]
        fold_counts = np.bincount(train.y, minlength=full_stats.g_count + 1)[1:]
        if np.any(fold_counts < 2):
            raise InvalidInput(
                f"fold {fold} leaves a group with fewer than 2 training rows"
            )
        fold_stats = compute_group_stats(train, cov_mode=config.cov_mode)
        path = fit_path(
            fold_stats,
            lambdas,
            alpha=config.alpha,
            tol=config.tol,
            max_sweeps=config.max_sweeps,
            root_tol=config.root_tol,
        )
        for i, (coeffs, report) in enumerate(path):
            pen = PenaltySpec(lam=float(lambdas[i]), alpha=config.alpha)
            model = build_model(coeffs, fold_stats, pen)
            predictions = predict(model, valid_x)
            errors[fold, i] = float(np.mean(predictions != valid_y))
            support_sizes[fold, i] = len(report.support)

    mean_errors = errors.mean(axis=0)
    mean_support_sizes = support_sizes.mean(axis=0)
    # lambdas descend, so the first argmin is the largest penalty among ties
    best_idx = int(np.argmin(mean_errors))
    best_lambda = float(lambdas[best_idx])

    final_pen = PenaltySpec(
        lam=best_lambda,
        alpha=config.alpha,
        tol=config.tol,
        max_sweeps=config.max_sweeps,
        root_tol=config.root_tol,
    )
    coeffs, _ = fit(full_stats, final_pen)
    model = build_model(
        coeffs, full_stats, final_pen, labels=labels, feature_names=feature_names
    )
    return CvResult(
        best_lambda=best_lambda,
        best_error=float(mean_errors[best_idx]),
        lambdas=lambdas,
        mean_errors=mean_errors,
        mean_support_sizes=mean_support_sizes,
        model=model,
    )


__all__ = ["CvConfig", "CvResult", "cross_validate"]
