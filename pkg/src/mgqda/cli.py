"""Command-line interface: fit, cv, predict, simulate.

Conventions
-----------
* stdout carries data (predictions, reports, benchmark tables when no
  ``--out`` is given); stderr carries diagnostics and warnings.
* exit codes: 0 success, 2 usage/user error, 1 internal error.
* every command is deterministic given its flags; set ``MGQDA_TIMING=1``
  to record wall-clock fit times in benchmark output (at the cost of
  byte-reproducibility of the ``fit_ms`` column).
* ``MGQDA_THREADS`` caps benchmark parallelism (default: available cores).
* flag values beat values from an optional ``--config`` file (``key = value``
  lines, TOML-style), which beat built-in defaults.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .classifier import build_model, load_model, save_model, score_matrix
from .exceptions import InvalidInput, MgqdaError
from .simgen import (
    RNG_SCHEME,
    SimulationSpec,
    benchmark_columns,
    run_benchmark,
)
from .solver import PenaltySpec, fit, lambda_max
from .stats import Dataset, compute_group_stats
from .tuning import CvConfig, cross_validate

_VARIANCE_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# baseline classifier


@dataclass
class DiagonalLdaModel:
    """Nearest-centroid rule in pooled per-feature variance metric with priors."""

    means: NDArray
    inv_variances: NDArray
    log_priors: NDArray
    labels: list

    def predict(self, x) -> NDArray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[None, :]
        scores = np.zeros((x.shape[0], self.means.shape[0]))
        for g in range(self.means.shape[0]):
            diff = x - self.means[g]
            scores[:, g] = diff**2 @ self.inv_variances - 2.0 * self.log_priors[g]
        idx = np.argmin(scores, axis=1)
        return np.asarray(self.labels)[idx]


def baseline_classifier(train: Dataset, labels: list | None = None) -> DiagonalLdaModel:
    """Diagonal linear discriminant baseline.

    Pools within-group per-feature variances across groups (maximum
    likelihood divisor) and floors them at 1e-12.
    """
    stats = compute_group_stats(train, cov_mode="ml")
    pooled = np.zeros(train.p)
    for g in range(stats.g_count):
        pooled += stats.priors[g] * np.diag(stats.covariances[g])
    pooled = np.maximum(pooled, _VARIANCE_FLOOR)
    if labels is None:
        labels = list(range(1, stats.g_count + 1))
    return DiagonalLdaModel(
        means=stats.means,
        inv_variances=1.0 / pooled,
        log_priors=np.log(stats.priors),
        labels=labels,
    )


# ---------------------------------------------------------------------------
# CSV ingestion and emission


def read_labeled_csv(
    path: str, label_col: str, features: list[str] | None = None
) -> tuple[Dataset, list, list[str]]:
    """Read a labeled CSV into a Dataset.

    Labels may be arbitrary strings; they map to group indices 1..G by
    first appearance.  Returns the dataset, the labels in group order, and
    the feature column names used.
    """
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInput(f"{path}: empty file") from None
        if label_col not in header:
            raise InvalidInput(f"{path}: no column named {label_col!r}")
        label_idx = header.index(label_col)
        if features is None:
            feature_names = [h for i, h in enumerate(header) if i != label_idx]
        else:
            missing = [f for f in features if f not in header]
            if missing:
                raise InvalidInput(f"{path}: missing feature columns {missing}")
            if label_col in features:
                raise InvalidInput(f"{path}: label column {label_col!r} listed as feature")
            feature_names = list(features)
        feature_idx = [header.index(f) for f in feature_names]

        rows: list[list[float]] = []
        raw_labels: list[str] = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise InvalidInput(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(record)}"
                )
            raw_labels.append(record[label_idx])
            try:
                rows.append([float(record[i]) for i in feature_idx])
            except ValueError as exc:
                raise InvalidInput(
                    f"{path}:{lineno}: non-numeric feature value ({exc})"
                ) from None

    return _build_dataset(rows, raw_labels, feature_names, path)


def _build_dataset(rows, raw_labels, feature_names, path):
    if not rows:
        raise InvalidInput(f"{path}: no data rows")
    label_order: list = []
    seen: dict = {}
    y = np.zeros(len(raw_labels), dtype=np.int64)
    for i, label in enumerate(raw_labels):
        if label not in seen:
            seen[label] = len(label_order) + 1
            label_order.append(label)
        y[i] = seen[label]
    if len(label_order) < 2:
        raise InvalidInput(f"{path}: need at least 2 distinct labels")
    x = np.asarray(rows, dtype=float)
    return Dataset(x, y, feature_names=feature_names), label_order, feature_names


def read_unlabeled_csv(
    path: str, label_col: str | None = None, features: list[str] | None = None
) -> NDArray:
    """Read a feature-only CSV (optionally dropping a label column) as a matrix."""
    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise InvalidInput(f"{path}: empty file") from None
        skip = set()
        if label_col is not None:
            if label_col not in header:
                raise InvalidInput(f"{path}: no column named {label_col!r}")
            skip.add(header.index(label_col))
        if features is None:
            feature_idx = [i for i in range(len(header)) if i not in skip]
        else:
            missing = [f for f in features if f not in header]
            if missing:
                raise InvalidInput(f"{path}: missing feature columns {missing}")
            feature_idx = [header.index(f) for f in features]
        rows = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise InvalidInput(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(record)}"
                )
            try:
                rows.append([float(record[i]) for i in feature_idx])
            except ValueError as exc:
                raise InvalidInput(f"{path}:{lineno}: non-numeric feature value ({exc})")
    if rows:
        return np.asarray(rows, dtype=float)
    return np.zeros((0, len(feature_idx)))


def format_cell(value) -> str:
    """CSV cell: full-precision floats, empty string for missing values."""
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def _open_out(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def write_rows(path: str | None, header: list[str], rows: list[list]) -> None:
    handle, owned = _open_out(path)
    try:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])
    finally:
        if owned:
            handle.close()


# ---------------------------------------------------------------------------
# config file handling

_SENTINEL = object()


def load_config(path: str) -> dict:
    """Parse a flat ``key = value`` config file (TOML-style scalars).

    Understands strings (quoted or bare), numbers, and booleans; ignores
    blank lines, comments, and section headers.
    """
    values: dict = {}
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            text = line.strip()
            if not text or text.startswith("#") or text.startswith("["):
                continue
            if "=" not in text:
                raise InvalidInput(f"{path}:{lineno}: expected 'key = value'")
            key, _, raw = text.partition("=")
            key = key.strip().replace("-", "_")
            raw = raw.split("#", 1)[0].strip()
            values[key] = _parse_scalar(raw)
    return values


def _parse_scalar(raw: str):
    if raw.startswith(("'", '"')) and raw.endswith(raw[0]) and len(raw) >= 2:
        return raw[1:-1]
    if raw == "true":
        return True
    if raw == "false":
        return False
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return float(raw)
    except ValueError:
        pass
    return raw


def merge_params(args: argparse.Namespace, defaults: dict) -> dict:
    """Resolve parameters with precedence flags > config file > defaults."""
    provided = {k: v for k, v in vars(args).items() if v is not _SENTINEL}
    config_path = provided.pop("config", None)
    for internal in ("func", "command"):
        provided.pop(internal, None)
    params = dict(defaults)
    if config_path is not None:
        config = load_config(config_path)
        unknown = set(config) - set(defaults)
        if unknown:
            raise InvalidInput(f"config file has unknown keys: {sorted(unknown)}")
        params.update(config)
    params.update(provided)
    return params


# ---------------------------------------------------------------------------
# commands


def _coerce(params: dict, key: str, kind, where: str):
    value = params[key]
    if value is None:
        return None
    try:
        if kind is bool and isinstance(value, str):
            raise ValueError(f"expected boolean, got {value!r}")
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"{where}: bad value for {key}: {exc}") from exc


def cmd_fit(args: argparse.Namespace) -> int:
    defaults = {
        "train": None,
        "label_col": None,
        "lam": None,
        "alpha": 0.5,
        "cov_mode": "ml",
        "tol": 1e-6,
        "max_sweeps": 1000,
        "features": None,
        "out": None,
    }
    params = merge_params(args, defaults)
    for key in ("train", "label_col", "lam", "out"):
        if params[key] is None:
            raise InvalidInput(f"fit: --{key.replace('_', '-')} is required")
    features = _parse_features(params["features"])
    data, labels, feature_names = read_labeled_csv(
        params["train"], params["label_col"], features
    )
    stats = compute_group_stats(data, cov_mode=str(params["cov_mode"]))
    pen = PenaltySpec(
        lam=_coerce(params, "lam", float, "fit"),
        alpha=_coerce(params, "alpha", float, "fit"),
        tol=_coerce(params, "tol", float, "fit"),
        max_sweeps=_coerce(params, "max_sweeps", int, "fit"),
    )
    coeffs, report = fit(stats, pen)
    model = build_model(coeffs, stats, pen, labels=labels, feature_names=feature_names)
    save_model(model, params["out"])
    if model.prior_only and pen.lam >= lambda_max(stats, pen.alpha):
        print(
            f"warning: lambda={pen.lam:g} is at or above the all-zero threshold "
            f"{lambda_max(stats, pen.alpha):g}; model is prior-only",
            file=sys.stderr,
        )
    sizes = ", ".join(
        f"g{g + 1}={len(s)}" for g, s in enumerate(report.group_supports)
    )
    print(
        f"fit: support={len(report.support)} ({sizes}), "
        f"objective={report.objective_trace[-1]:.6g}, sweeps={report.sweeps_used}",
        file=sys.stderr,
    )
    return 0


def cmd_cv(args: argparse.Namespace) -> int:
    defaults = {
        "train": None,
        "label_col": None,
        "folds": 5,
        "n_lambda": 30,
        "ratio": 0.01,
        "alpha": 0.5,
        "cov_mode": "ml",
        "features": None,
        "out": None,
        "report": None,
    }
    params = merge_params(args, defaults)
    for key in ("train", "label_col", "out"):
        if params[key] is None:
            raise InvalidInput(f"cv: --{key.replace('_', '-')} is required")
    features = _parse_features(params["features"])
    data, labels, feature_names = read_labeled_csv(
        params["train"], params["label_col"], features
    )
    config = CvConfig(
        folds=_coerce(params, "folds", int, "cv"),
        n_lambda=_coerce(params, "n_lambda", int, "cv"),
        ratio=_coerce(params, "ratio", float, "cv"),
        alpha=_coerce(params, "alpha", float, "cv"),
        cov_mode=str(params["cov_mode"]),
    )
    result = cross_validate(data, config, labels=labels, feature_names=feature_names)
    save_model(result.model, params["out"])
    report_rows = [
        [result.lambdas[i], result.mean_errors[i], result.mean_support_sizes[i]]
        for i in range(result.lambdas.size)
    ]
    write_rows(params["report"], ["lambda", "mean_error", "mean_support_size"], report_rows)
    print(
        f"cv: best_lambda={result.best_lambda!r}, mean_error={result.best_error:.6g}, "
        f"support={result.model.support_size}",
        file=sys.stderr,
    )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    defaults = {
        "model": None,
        "data": None,
        "label_col": None,
        "scores": False,
        "out": None,
    }
    params = merge_params(args, defaults)
    for key in ("model", "data"):
        if params[key] is None:
            raise InvalidInput(f"predict: --{key} is required")
    model = load_model(params["model"])
    x = read_unlabeled_csv(
        params["data"], label_col=params["label_col"], features=model.feature_names
    )
    if x.shape[1] != model.p_full:
        raise InvalidInput(
            f"predict: model expects {model.p_full} features, data has {x.shape[1]}"
        )
    header = ["row", "predicted_label"]
    with_scores = bool(params["scores"])
    if with_scores:
        header += [f"score_{g + 1}" for g in range(model.g_count)]
    rows: list[list] = []
    if x.shape[0]:
        scores = score_matrix(model, x)
        idx = np.argmin(scores, axis=1)
        labels = np.asarray(model.labels)[idx]
        for i in range(x.shape[0]):
            row: list = [i, labels[i]]
            if with_scores:
                row += [float(s) for s in scores[i]]
            rows.append(row)
    write_rows(params["out"], header, rows)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    defaults = {
        "model": None,
        "p": None,
        "reps": 1,
        "seed": 0,
        "n_g": 100,
        "n_test": 1000,
        "cv": False,
        "lam": None,
        "alpha": 0.5,
        "folds": 5,
        "n_lambda": 30,
        "ratio": 0.01,
        "baseline": False,
        "out": None,
    }
    params = merge_params(args, defaults)
    for key in ("model", "p"):
        if params[key] is None:
            raise InvalidInput(f"simulate: --{key} is required")
    if params["cv"] and params["lam"] is not None:
        raise InvalidInput("simulate: --cv and --lambda are mutually exclusive")
    spec = SimulationSpec(
        model_id=_coerce(params, "model", int, "simulate"),
        p=_coerce(params, "p", int, "simulate"),
        n_g=_coerce(params, "n_g", int, "simulate"),
        n_test=_coerce(params, "n_test", int, "simulate"),
        seed=_coerce(params, "seed", int, "simulate"),
        reps=_coerce(params, "reps", int, "simulate"),
    )
    alpha = _coerce(params, "alpha", float, "simulate")
    if params["lam"] is not None:
        pen = PenaltySpec(lam=_coerce(params, "lam", float, "simulate"), alpha=alpha)
        cv = None
    else:
        pen = None
        cv = CvConfig(
            folds=_coerce(params, "folds", int, "simulate"),
            n_lambda=_coerce(params, "n_lambda", int, "simulate"),
            ratio=_coerce(params, "ratio", float, "simulate"),
            alpha=alpha,
        )
    baseline_fn = baseline_classifier if params["baseline"] else None
    workers = _thread_budget()
    measure_time = os.environ.get("MGQDA_TIMING", "") in ("1", "true", "yes")
    print(
        f"simulate: model={spec.model_id} p={spec.p} reps={spec.reps} "
        f"seed={spec.seed} rng={RNG_SCHEME} workers={workers}",
        file=sys.stderr,
    )
    rows = run_benchmark(
        spec,
        pen=pen,
        cv=cv,
        baseline_fn=baseline_fn,
        workers=workers,
        measure_time=measure_time,
    )
    columns = benchmark_columns(spec.g_count, baseline_fn is not None)
    write_rows(params["out"], columns, [[row[c] for c in columns] for row in rows])
    failures = sum(1 for row in rows if row["status"] != "ok")
    if failures:
        print(f"simulate: {failures} of {spec.reps} replications failed", file=sys.stderr)
    return 0


def _parse_features(raw) -> list[str] | None:
    if raw is None:
        return None
    if isinstance(raw, str):
        features = [f.strip() for f in raw.split(",") if f.strip()]
        if not features:
            raise InvalidInput("--features: empty feature list")
        return features
    raise InvalidInput(f"--features: expected a comma-separated string, got {raw!r}")


def _thread_budget() -> int:
    raw = os.environ.get("MGQDA_THREADS", "")
    if raw:
        try:
            value = int(raw)
        except ValueError:
            raise InvalidInput(f"MGQDA_THREADS must be an integer, got {raw!r}") from None
        if value < 1:
            raise InvalidInput(f"MGQDA_THREADS must be >= 1, got {value}")
        return value
    return os.cpu_count() or 1


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgqda",
        description="Sparse multi-group quadratic discriminant analysis via projection.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=_SENTINEL, help="TOML-style config file")

    p_fit = sub.add_parser("fit", help="fit at a fixed penalty and save the model")
    p_fit.add_argument("--train", default=_SENTINEL, help="labeled training CSV")
    p_fit.add_argument("--label-col", dest="label_col", default=_SENTINEL)
    p_fit.add_argument("--lambda", dest="lam", type=float, default=_SENTINEL)
    p_fit.add_argument("--alpha", type=float, default=_SENTINEL)
    p_fit.add_argument("--cov-mode", dest="cov_mode", choices=["ml", "sample"], default=_SENTINEL)
    p_fit.add_argument("--tol", type=float, default=_SENTINEL)
    p_fit.add_argument("--max-sweeps", dest="max_sweeps", type=int, default=_SENTINEL)
    p_fit.add_argument("--features", default=_SENTINEL, help="comma-separated subset")
    p_fit.add_argument("--out", default=_SENTINEL, help="output model JSON path")
    add_common(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_cv = sub.add_parser("cv", help="select the penalty by cross-validation")
    p_cv.add_argument("--train", default=_SENTINEL)
    p_cv.add_argument("--label-col", dest="label_col", default=_SENTINEL)
    p_cv.add_argument("--folds", type=int, default=_SENTINEL)
    p_cv.add_argument("--n-lambda", dest="n_lambda", type=int, default=_SENTINEL)
    p_cv.add_argument("--ratio", type=float, default=_SENTINEL)
    p_cv.add_argument("--alpha", type=float, default=_SENTINEL)
    p_cv.add_argument("--cov-mode", dest="cov_mode", choices=["ml", "sample"], default=_SENTINEL)
    p_cv.add_argument("--features", default=_SENTINEL)
    p_cv.add_argument("--out", default=_SENTINEL, help="output model JSON path")
    p_cv.add_argument("--report", default=_SENTINEL, help="per-lambda CSV report path")
    add_common(p_cv)
    p_cv.set_defaults(func=cmd_cv)

    p_pred = sub.add_parser("predict", help="predict labels with a saved model")
    p_pred.add_argument("--model", default=_SENTINEL, help="model JSON path")
    p_pred.add_argument("--data", default=_SENTINEL, help="feature CSV")
    p_pred.add_argument("--label-col", dest="label_col", default=_SENTINEL,
                        help="column to ignore in the data file")
    p_pred.add_argument("--scores", action="store_const", const=True, default=_SENTINEL,
                        help="append per-group score columns")
    p_pred.add_argument("--out", default=_SENTINEL)
    add_common(p_pred)
    p_pred.set_defaults(func=cmd_predict)

    p_sim = sub.add_parser("simulate", help="run a synthetic benchmark")
    p_sim.add_argument("--model", type=int, default=_SENTINEL, help="model id 1..8")
    p_sim.add_argument("--p", type=int, default=_SENTINEL, help="dimension (>= 50)")
    p_sim.add_argument("--reps", type=int, default=_SENTINEL)
    p_sim.add_argument("--seed", type=int, default=_SENTINEL)
    p_sim.add_argument("--n-g", dest="n_g", type=int, default=_SENTINEL)
    p_sim.add_argument("--n-test", dest="n_test", type=int, default=_SENTINEL)
    p_sim.add_argument("--cv", action="store_const", const=True, default=_SENTINEL)
    p_sim.add_argument("--lambda", dest="lam", type=float, default=_SENTINEL)
    p_sim.add_argument("--alpha", type=float, default=_SENTINEL)
    p_sim.add_argument("--folds", type=int, default=_SENTINEL)
    p_sim.add_argument("--n-lambda", dest="n_lambda", type=int, default=_SENTINEL)
    p_sim.add_argument("--ratio", type=float, default=_SENTINEL)
    p_sim.add_argument("--baseline", action="store_const", const=True, default=_SENTINEL)
    p_sim.add_argument("--out", default=_SENTINEL, help="benchmark CSV path")
    add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MgqdaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry_point() -> None:
    sys.exit(main())


__all__ = [
    "DiagonalLdaModel",
    "baseline_classifier",
    "build_parser",
    "load_config",
    "main",
    "read_labeled_csv",
    "read_unlabeled_csv",
]
