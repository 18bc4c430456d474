"""Projected quadratic classification rule.

A fitted model restricts data to the support rows of the coefficient
matrix, projects through the restricted coefficients, and scores each group
with a quadratic form in the pseudoinverse of the projected group
covariance plus its log pseudodeterminant minus twice the log prior.  The
pseudoinverse route makes the rule well defined when projected covariances
are rank deficient; when they are invertible it coincides with the plain
inverse and log determinant.  Ties in the argmin go to the smaller group
index.  An empty support yields a prior-only model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .exceptions import InvalidInput
from .linalg import DEFAULT_RANK_TOL, pinv_logpdet, symmetrize
from .solver import Coefficients, PenaltySpec, extract_support
from .stats import GroupStats

FORMAT_VERSION = 1


@dataclass
class FittedModel:
    """Support-restricted classifier state plus cached projected inverses.

    ``support`` and ``group_supports`` hold 0-based feature indices into the
    original p features; ``omega_s``, ``means_s`` and ``cov_s`` are already
    restricted to ``support``.  ``labels[g]`` is the external label of group
    ``g`` (0-based).
    """

    g_count: int
    p_full: int
    labels: list
    priors: NDArray
    support: NDArray
    group_supports: list[NDArray]
    omega_s: NDArray
    means_s: NDArray
    cov_s: NDArray
    alpha: float
    lam: float
    cov_mode: str
    feature_names: list[str] | None = None
    proj_inv: NDArray | None = None
    log_pdet: NDArray | None = None

    @property
    def prior_only(self) -> bool:
        return self.support.size == 0

    @property
    def support_size(self) -> int:
        return int(self.support.size)


def _finalize(model: FittedModel) -> FittedModel:
    """Compute the cached projected pseudoinverses and log pseudodeterminants."""
    g_count = model.g_count
    width = g_count * (g_count - 1)
    proj_inv = np.zeros((g_count, width, width))
    log_pdet = np.zeros(g_count)
    for g in range(g_count):
        projected = symmetrize(model.omega_s.T @ model.cov_s[g] @ model.omega_s)
        proj_inv[g], log_pdet[g] = pinv_logpdet(projected, DEFAULT_RANK_TOL)
    model.proj_inv = proj_inv
    model.log_pdet = log_pdet
    return model


def build_model(
    coeffs: Coefficients,
    stats: GroupStats,
    pen: PenaltySpec,
    labels: list | None = None,
    feature_names: list[str] | None = None,
) -> FittedModel:
    """Assemble a classifier from fitted coefficients and group statistics.

    The support is taken from exactly nonzero coefficient blocks; means and
    covariances are restricted to it.  ``labels`` defaults to ``1..G``.
    """
    if coeffs.g_count != stats.g_count:
        raise InvalidInput("build_model: coefficients and stats disagree on group count")
    if coeffs.p != stats.p:
        raise InvalidInput("build_model: coefficients and stats disagree on feature count")
    g_count = stats.g_count
    if labels is None:
        labels = list(range(1, g_count + 1))
    if len(labels) != g_count:
        raise InvalidInput(f"build_model: expected {g_count} labels, got {len(labels)}")
    support_list, group_support_lists = extract_support(coeffs)
    support = np.asarray(support_list, dtype=np.int64)
    model = FittedModel(
        g_count=g_count,
        p_full=stats.p,
        labels=list(labels),
        priors=stats.priors.copy(),
        support=support,
        group_supports=[np.asarray(s, dtype=np.int64) for s in group_support_lists],
        omega_s=coeffs.matrix[support].copy(),
        means_s=stats.means[:, support].copy(),
        cov_s=stats.covariances[:, support][:, :, support].copy(),
        alpha=pen.alpha,
        lam=pen.lam,
        cov_mode=stats.cov_mode,
        feature_names=list(feature_names) if feature_names is not None else None,
    )
    return _finalize(model)


def _raw_scores(model: FittedModel, x: NDArray) -> NDArray:
    """Scores for rows of ``x`` (already validated), shape (m, G); lower wins."""
    x_s = x[:, model.support]
    m = x.shape[0]
    scores = np.zeros((m, model.g_count))
    log_priors = np.log(model.priors)
    for g in range(model.g_count):
        centered = x_s - model.means_s[g]
        z = centered @ model.omega_s
        quad = np.einsum("mk,kl,ml->m", z, model.proj_inv[g], z)
        scores[:, g] = quad + model.log_pdet[g] - 2.0 * log_priors[g]
    return scores


def _check_points(model: FittedModel, x, op: str) -> NDArray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != model.p_full:
        raise InvalidInput(
            f"{op}: expected points of length {model.p_full}, got shape {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise InvalidInput(f"{op}: points contain non-finite entries")
    return x


def score(model: FittedModel, x) -> NDArray:
    """Group scores for one point of length ``p_full`` (lower is better)."""
    pts = _check_points(model, x, "score")
    if pts.shape[0] != 1:
        raise InvalidInput(f"score: expected a single point, got {pts.shape[0]} rows")
    return _raw_scores(model, pts)[0]


def score_matrix(model: FittedModel, x) -> NDArray:
    """Group scores for each row of an (m, p_full) matrix, shape (m, G)."""
    pts = _check_points(model, x, "score_matrix")
    return _raw_scores(model, pts)


def predict(model: FittedModel, x) -> NDArray:
    """Predicted labels for an (m, p_full) matrix; ties go to the smaller group index."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.shape[0] == 0:
        return np.asarray(model.labels)[:0]
    pts = _check_points(model, x, "predict")
    idx = np.argmin(_raw_scores(model, pts), axis=1)
    return np.asarray(model.labels)[idx]


def basis_invariance_check(
    coeffs: Coefficients,
    stats: GroupStats,
    pen: PenaltySpec,
    r: NDArray,
    points: NDArray,
    labels: list | None = None,
) -> bool:
    """Whether predictions agree after right-multiplying the basis by ``r``.

    ``r`` must be an invertible matrix of side ``G*(G-1)``.  For a basis of
    full column rank with invertible projected covariances the rule is
    invariant, so this returns True up to degenerate near-rank-deficiency.
    """
    r = np.asarray(r, dtype=float)
    width = coeffs.g_count * (coeffs.g_count - 1)
    if r.shape != (width, width):
        raise InvalidInput(f"basis_invariance_check: r must have shape ({width}, {width})")
    base = build_model(coeffs, stats, pen, labels=labels)
    rotated = build_model(
        Coefficients(coeffs.matrix @ r, coeffs.g_count), stats, pen, labels=labels
    )
    return bool(np.array_equal(predict(base, points), predict(rotated, points)))


def _tril_flat(a: NDArray) -> list[float]:
    idx = np.tril_indices(a.shape[0])
    return a[idx].tolist()


def _tril_unflat(values, dim: int) -> NDArray:
    out = np.zeros((dim, dim))
    out[np.tril_indices(dim)] = values
    return np.tril(out) + np.tril(out, -1).T


def model_to_dict(model: FittedModel) -> dict:
    """JSON-compatible dictionary representation of the model."""
    doc = {
        "format_version": FORMAT_VERSION,
        "p_full": model.p_full,
        "g_count": model.g_count,
        "labels": model.labels,
        "priors": model.priors.tolist(),
        "support": model.support.tolist(),
        "group_supports": [s.tolist() for s in model.group_supports],
        "omega_s": model.omega_s.ravel(order="C").tolist(),
        "means_s": model.means_s.tolist(),
        "cov_s": [_tril_flat(model.cov_s[g]) for g in range(model.g_count)],
        "alpha": model.alpha,
        "lambda": model.lam,
        "cov_mode": model.cov_mode,
    }
    if model.feature_names is not None:
        doc["feature_names"] = model.feature_names
    return doc


def model_from_dict(doc: dict) -> FittedModel:
    """Rebuild a model from its dictionary form, recomputing cached inverses."""
    if not isinstance(doc, dict):
        raise InvalidInput("model document must be a JSON object")
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise InvalidInput(f"unsupported model format_version: {version!r}")
    try:
        g_count = int(doc["g_count"])
        p_full = int(doc["p_full"])
        if g_count < 2:
            raise ValueError(f"g_count must be at least 2, got {g_count}")
        labels = list(doc["labels"])
        priors = np.asarray(doc["priors"], dtype=float)
        support = np.asarray(doc["support"], dtype=np.int64)
        group_supports = [np.asarray(s, dtype=np.int64) for s in doc["group_supports"]]
        width = g_count * (g_count - 1)
        s = support.size
        omega_s = np.asarray(doc["omega_s"], dtype=float).reshape(s, width)
        means_s = np.asarray(doc["means_s"], dtype=float).reshape(g_count, s)
        cov_s = np.stack([_tril_unflat(doc["cov_s"][g], s) for g in range(g_count)])
        alpha = float(doc["alpha"])
        lam = float(doc["lambda"])
        cov_mode = str(doc["cov_mode"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"malformed model document: {exc}") from exc
    feature_names = doc.get("feature_names")
    model = FittedModel(
        g_count=g_count,
        p_full=p_full,
        labels=labels,
        priors=priors,
        support=support,
        group_supports=group_supports,
        omega_s=omega_s,
        means_s=means_s,
        cov_s=cov_s,
        alpha=alpha,
        lam=lam,
        cov_mode=cov_mode,
        feature_names=list(feature_names) if feature_names is not None else None,
    )
    return _finalize(model)


def save_model(model: FittedModel, path) -> None:
    """Write the model as a single JSON document.

    Floats serialize with full round-trip precision, so loading reproduces
    the model (and its predictions) exactly.
    """
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(model_to_dict(model), handle, indent=1)
        handle.write("\n")


def load_model(path) -> FittedModel:
    """Read a model written by ``save_model``."""
    with open(path, "r", encoding="utf-8") as handle:
        try:
            doc = json.load(handle)
        except json.JSONDecodeError as exc:
            raise InvalidInput(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


__all__ = [
    "FORMAT_VERSION",
    "FittedModel",
    "basis_invariance_check",
    "build_model",
    "load_model",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "save_model",
    "score",
    "score_matrix",
]
