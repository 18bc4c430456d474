"""Synthetic benchmark suite for sparse multi-group discriminant analysis.

Eight data-generating models over four structured covariance families.
Models 1-5 have three groups, models 6-8 have five; the leading ``b``
coordinates (30 for models 1-4, 50 for models 5-8) carry all mean and
covariance signal and the remaining coordinates are standard normal noise.

Replications are reproducible: every (replication, group, purpose) triple
gets its own counter-derived generator stream, so reruns with the same seed
produce byte-identical data regardless of execution order.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np
from numpy.typing import NDArray

from .classifier import FittedModel, build_model, predict
from .exceptions import ConstructionError, InvalidInput
from .linalg import psd_factor, symmetrize
from .solver import PenaltySpec, fit
from .stats import Dataset, compute_group_stats
from .tuning import CvConfig, cross_validate

RNG_SCHEME = "pcg64:seedseq(seed; rep, purpose, group)"

# purpose codes for the per-(rep, purpose, group) generator streams
_PURPOSE_COV = 0
_PURPOSE_TRAIN = 1
_PURPOSE_TEST = 2


@dataclass(frozen=True)
class BlockEquicorrelation:
    """Leading block ``rho * I + (1 - rho) * ones``, identity elsewhere."""

    b: int
    rho: float


@dataclass(frozen=True)
class BlockAutocorrelation:
    """Leading block with entries ``rho ** |i - j|``, identity elsewhere."""

    b: int
    rho: float


@dataclass(frozen=True)
class Spiked:
    """Two-spike covariance ``a1 q1 q1' + a2 q2 q2' + I`` over all p coordinates.

    ``q1`` and ``q2`` are direction vectors of length p, unit-normalized
    before use.
    """

    q1: NDArray
    q2: NDArray
    a1: float
    a2: float


@dataclass(frozen=True)
class BlockModel:
    """Leading block ``U' diag(lam) U`` with ``lam ~ U[1,2]`` and ``U`` iid
    standard normal, drawn from ``seed``; identity elsewhere."""

    b: int
    seed: int


CovarianceFamily = Union[BlockEquicorrelation, BlockAutocorrelation, Spiked, BlockModel]


def make_covariance(family: CovarianceFamily, p: int) -> NDArray:
    """Realize a covariance family as an exactly symmetric (p, p) matrix.

    Raises
    ------
    InvalidInput
        If the block size exceeds ``p`` or a parameter is out of range.
    ConstructionError
        If the result fails the positive-semidefiniteness check
        (minimum eigenvalue below ``-1e-8 *`` maximum eigenvalue).
    """
    if p < 1:
        raise InvalidInput(f"make_covariance: p must be positive, got {p}")
    sigma = np.eye(p)
    if isinstance(family, BlockEquicorrelation):
        _check_block(family.b, p)
        if not 0.0 <= family.rho <= 1.0:
            raise InvalidInput(f"equicorrelation rho must be in [0, 1], got {family.rho}")
        block = family.rho * np.eye(family.b) + (1.0 - family.rho) * np.ones(
            (family.b, family.b)
        )
        sigma[: family.b, : family.b] = block
    elif isinstance(family, BlockAutocorrelation):
        _check_block(family.b, p)
        if not 0.0 <= family.rho < 1.0:
            raise InvalidInput(f"autocorrelation rho must be in [0, 1), got {family.rho}")
        idx = np.arange(family.b)
        sigma[: family.b, : family.b] = family.rho ** np.abs(idx[:, None] - idx[None, :])
    elif isinstance(family, Spiked):
        q1 = np.asarray(family.q1, dtype=float)
        q2 = np.asarray(family.q2, dtype=float)
        if q1.shape != (p,) or q2.shape != (p,):
            raise InvalidInput(f"spiked directions must have length {p}")
        n1 = np.linalg.norm(q1)
        n2 = np.linalg.norm(q2)
        if n1 == 0.0 or n2 == 0.0:
            raise InvalidInput("spiked directions must be nonzero")
        q1 = q1 / n1
        q2 = q2 / n2
        sigma = family.a1 * np.outer(q1, q1) + family.a2 * np.outer(q2, q2) + np.eye(p)
    elif isinstance(family, BlockModel):
        _check_block(family.b, p)
        rng = np.random.default_rng(family.seed)
        lam = rng.uniform(1.0, 2.0, size=family.b)
        u = rng.standard_normal((family.b, family.b))
        sigma[: family.b, : family.b] = u.T @ (lam[:, None] * u)
    else:
        raise InvalidInput(f"unknown covariance family: {family!r}")
    sigma = symmetrize(sigma)
    eigvals = np.linalg.eigvalsh(sigma)
    if eigvals[0] < -1e-8 * max(eigvals[-1], 0.0):
        raise ConstructionError(
            f"covariance from {type(family).__name__} is not PSD: "
            f"min eigenvalue {eigvals[0]:.3e}"
        )
    return sigma


def _check_block(b: int, p: int) -> None:
    if not 1 <= b <= p:
        raise InvalidInput(f"block size {b} must be in 1..{p}")


def family_signal_indices(family: CovarianceFamily, p: int) -> set[int]:
    """0-based coordinates where the family's covariance differs from identity."""
    if isinstance(family, BlockEquicorrelation):
        return set() if family.rho == 1.0 else set(range(family.b))
    if isinstance(family, BlockAutocorrelation):
        return set() if family.rho == 0.0 else set(range(family.b))
    if isinstance(family, Spiked):
        out: set[int] = set()
        if family.a1 != 0.0:
            out |= set(np.flatnonzero(np.asarray(family.q1)).tolist())
        if family.a2 != 0.0:
            out |= set(np.flatnonzero(np.asarray(family.q2)).tolist())
        return out
    if isinstance(family, BlockModel):
        return set(range(family.b))
    raise InvalidInput(f"unknown covariance family: {family!r}")


@dataclass
class ModelDefinition:
    """Realized means, covariances and true supports of one benchmark model."""

    model_id: int
    p: int
    g_count: int
    b: int
    means: NDArray
    covariances: NDArray
    support: list[int]
    group_supports: list[list[int]]


def _block_vector(p: int, pieces: list[tuple[int, int, float]]) -> NDArray:
    """Vector with constant values on 0-based index ranges [start, stop)."""
    v = np.zeros(p)
    for start, stop, value in pieces:
        v[start:stop] = value
    return v


def _ramp_spike(p: int, b: int) -> tuple[NDArray, NDArray]:
    q1 = np.zeros(p)
    q2 = np.zeros(p)
    q1[:b] = np.arange(1, b + 1, dtype=float)
    q2[:b] = np.arange(b, 0, -1, dtype=float)
    return q1, q2


def _sqrt_ramp_spike(p: int, b: int) -> tuple[NDArray, NDArray]:
    q1 = np.zeros(p)
    q2 = np.zeros(p)
    q1[:b] = np.sqrt(np.arange(1, b + 1, dtype=float))
    q2[:b] = np.sqrt(np.arange(b, 0, -1, dtype=float))
    return q1, q2


def _staggered_means(p: int, g_count: int, value: float) -> NDArray:
    """Group g carries ``value`` on coordinates [10*(g-1), 10*g)."""
    return np.stack(
        [_block_vector(p, [(10 * g, 10 * (g + 1), value)]) for g in range(g_count)]
    )


def _model_families(model_id: int, b: int, p: int, block_seed: int) -> list[CovarianceFamily]:
    if model_id in (1, 2):
        q1, q2 = _ramp_spike(p, b)
        return [
            BlockEquicorrelation(b, 0.8),
            BlockAutocorrelation(b, 0.8),
            Spiked(q1, q2, 100.0, 10.0),
        ]
    if model_id == 3:
        return [
            BlockEquicorrelation(b, 0.3),
            BlockAutocorrelation(b, 0.7),
            BlockModel(b, block_seed),
        ]
    if model_id == 4:
        q1, q2 = _sqrt_ramp_spike(p, b)
        return [
            BlockEquicorrelation(b, 0.3),
            BlockAutocorrelation(b, 0.7),
            Spiked(q1, q2, 30.0, 5.0),
        ]
    if model_id == 5:
        rho0 = 0.8
        return [
            BlockAutocorrelation(b, rho0),
            BlockAutocorrelation(b, 0.7 * rho0),
            BlockAutocorrelation(b, 0.3 * rho0),
        ]
    # models 6-8 share one five-group covariance layout
    q1, q2 = _ramp_spike(p, b)
    return [
        BlockEquicorrelation(b, 0.5),
        BlockAutocorrelation(b, 0.5),
        Spiked(q1, q2, 100.0, 10.0),
        Spiked(q1, q2, 10.0, 100.0),
        BlockModel(b, block_seed),
    ]


def _model_means(model_id: int, p: int, g_count: int) -> NDArray:
    if model_id == 1:
        return np.stack(
            [
                np.zeros(p),
                _block_vector(p, [(0, 10, 1.0), (10, 20, -1.0)]),
                _block_vector(p, [(0, 10, -1.0), (10, 20, 1.0)]),
            ]
        )
    if model_id == 2:
        return np.stack(
            [
                np.zeros(p),
                _block_vector(p, [(0, 10, 0.5), (10, 20, -0.5)]),
                _block_vector(p, [(0, 10, -0.5), (10, 20, 0.5)]),
            ]
        )
    if model_id == 3:
        return _model_means(1, p, g_count)
    if model_id in (4, 5):
        return _staggered_means(p, 3, 1.0)
    if model_id == 6:
        return _staggered_means(p, 5, 1.0)
    if model_id == 7:
        return _staggered_means(p, 5, 0.5)
    # model 8
    return np.stack(
        [
            np.zeros(p),
            _block_vector(p, [(0, 20, 1.0)]),
            _block_vector(p, [(0, 10, 0.2), (10, 20, -0.2)]),
            _block_vector(p, [(20, 22, 5.0)]),
            _block_vector(p, [(25, 26, -10.0), (26, 27, 10.0)]),
        ]
    )


def model_spec(model_id: int, p: int, block_seed: int = 0) -> ModelDefinition:
    """Realize benchmark model ``model_id`` at dimension ``p``.

    Models 1-5 have three groups, 6-8 have five.  The signal block width is
    30 for models 1-4 and 50 for models 5-8, so ``p`` must be at least 50.
    ``block_seed`` drives the random covariance block in models 3 and 6-8.
    """
    if model_id not in range(1, 9):
        raise InvalidInput(f"model_id must be in 1..8, got {model_id}")
    if p < 50:
        raise InvalidInput(f"p must be at least 50, got {p}")
    g_count = 3 if model_id <= 5 else 5
    b = 30 if model_id <= 4 else 50
    means = _model_means(model_id, p, g_count)
    families = _model_families(model_id, b, p, block_seed)
    covariances = np.stack([make_covariance(f, p) for f in families])

    group_supports: list[list[int]] = []
    for g in range(g_count):
        mean_signal = set(np.flatnonzero(np.any(means != means[g], axis=0)).tolist())
        cov_signal = family_signal_indices(families[g], p)
        group_supports.append(sorted(mean_signal | cov_signal))
    support = sorted(set().union(*[set(s) for s in group_supports]))
    return ModelDefinition(
        model_id=model_id,
        p=p,
        g_count=g_count,
        b=b,
        means=means,
        covariances=covariances,
        support=support,
        group_supports=group_supports,
    )


@dataclass(frozen=True)
class SimulationSpec:
    """One benchmark configuration: model, dimension, sizes, seed, replications."""

    model_id: int
    p: int
    n_g: int = 100
    n_test: int = 1000
    seed: int = 0
    reps: int = 1

    def __post_init__(self) -> None:
        if self.model_id not in range(1, 9):
            raise InvalidInput(f"model_id must be in 1..8, got {self.model_id}")
        if self.p < 50:
            raise InvalidInput(f"p must be at least 50, got {self.p}")
        if self.n_g < 2:
            raise InvalidInput(f"n_g must be at least 2, got {self.n_g}")
        if self.n_test < 1:
            raise InvalidInput(f"n_test must be at least 1, got {self.n_test}")
        if self.reps < 1:
            raise InvalidInput(f"reps must be at least 1, got {self.reps}")
        if not 0 <= self.seed < 2**64:
            raise InvalidInput("seed must fit in an unsigned 64-bit integer")

    @property
    def g_count(self) -> int:
        return 3 if self.model_id <= 5 else 5


def _stream_rng(seed: int, rep: int, purpose: int, group: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(rep, purpose, group))
    return np.random.default_rng(ss)


def _rep_block_seed(seed: int, rep: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(rep, _PURPOSE_COV, 0))
    return int(ss.generate_state(1, np.uint64)[0])


def sample(spec: SimulationSpec, rep_index: int) -> tuple[Dataset, Dataset]:
    """Draw one replication's train and test sets.

    Train has exactly ``n_g`` rows per group; test splits ``n_test`` rows
    as evenly as possible (earlier groups take the remainder).  Rows are
    grouped by ascending label.  Deterministic in ``(spec.seed, rep_index)``.
    """
    if rep_index < 0:
        raise InvalidInput(f"rep_index must be >= 0, got {rep_index}")
    model = model_spec(spec.model_id, spec.p, _rep_block_seed(spec.seed, rep_index))
    g_count = model.g_count
    factors = [psd_factor(model.covariances[g]) for g in range(g_count)]

    base = spec.n_test // g_count
    extra = spec.n_test % g_count
    test_counts = [base + (1 if g < extra else 0) for g in range(g_count)]

    train_x, train_y, test_x, test_y = [], [], [], []
    for g in range(g_count):
        rng = _stream_rng(spec.seed, rep_index, _PURPOSE_TRAIN, g)
        z = rng.standard_normal((spec.n_g, spec.p))
        train_x.append(z @ factors[g].T + model.means[g])
        train_y.append(np.full(spec.n_g, g + 1, dtype=np.int64))
        rng = _stream_rng(spec.seed, rep_index, _PURPOSE_TEST, g)
        z = rng.standard_normal((test_counts[g], spec.p))
        test_x.append(z @ factors[g].T + model.means[g])
        test_y.append(np.full(test_counts[g], g + 1, dtype=np.int64))
    train = Dataset(np.vstack(train_x), np.concatenate(train_y))
    test = Dataset(np.vstack(test_x), np.concatenate(test_y))
    return train, test


@dataclass
class Metrics:
    """Test error and support-recovery rates; ``None`` marks undefined rates."""

    error_rate: float
    tpr: float | None
    fpr: float | None
    tpr_g: list[float | None]
    fpr_g: list[float | None]


def _rates(selected: set[int], truth: set[int], p: int) -> tuple[float | None, float | None]:
    tpr = len(selected & truth) / len(truth) if truth else None
    negatives = p - len(truth)
    fpr = len(selected - truth) / negatives if negatives else None
    return tpr, fpr


def evaluate(model: FittedModel, test: Dataset, truth: ModelDefinition) -> Metrics:
    """Score a fitted model against a test set and the generating truth."""
    predictions = predict(model, test.x)
    error_rate = float(np.mean(predictions != test.y))
    p = truth.p
    selected = set(model.support.tolist())
    tpr, fpr = _rates(selected, set(truth.support), p)
    tpr_g: list[float | None] = []
    fpr_g: list[float | None] = []
    for g in range(truth.g_count):
        sel_g = set(model.group_supports[g].tolist())
        t, f = _rates(sel_g, set(truth.group_supports[g]), p)
        tpr_g.append(t)
        fpr_g.append(f)
    return Metrics(error_rate=error_rate, tpr=tpr, fpr=fpr, tpr_g=tpr_g, fpr_g=fpr_g)


def benchmark_columns(g_count: int, baseline: bool) -> list[str]:
    """Column names of the replication table, in output order."""
    cols = ["rep", "seed", "model_id", "p", "lambda", "alpha", "error_rate", "tpr", "fpr"]
    cols += [f"tpr_g{g + 1}" for g in range(g_count)]
    cols += [f"fpr_g{g + 1}" for g in range(g_count)]
    cols += ["fit_ms", "status"]
    if baseline:
        cols.append("baseline_error")
    return cols


def _empty_row(spec: SimulationSpec, rep: int, baseline: bool) -> dict:
    row: dict = {col: None for col in benchmark_columns(spec.g_count, baseline)}
    row.update(rep=rep, seed=spec.seed, model_id=spec.model_id, p=spec.p)
    return row


def _run_replication(
    spec: SimulationSpec,
    rep: int,
    pen: PenaltySpec | None,
    cv: CvConfig | None,
    baseline_fn: Callable | None,
    measure_time: bool,
) -> dict:
    row = _empty_row(spec, rep, baseline_fn is not None)
    try:
        train, test = sample(spec, rep)
        truth = model_spec(spec.model_id, spec.p, _rep_block_seed(spec.seed, rep))
        started = time.perf_counter()
        if cv is not None:
            result = cross_validate(train, cv)
            model = result.model
            row["lambda"] = result.best_lambda
            row["alpha"] = cv.alpha
        else:
            stats = compute_group_stats(train)
            coeffs, _ = fit(stats, pen)
            model = build_model(coeffs, stats, pen)
            row["lambda"] = pen.lam
            row["alpha"] = pen.alpha
        if measure_time:
            row["fit_ms"] = (time.perf_counter() - started) * 1000.0
        metrics = evaluate(model, test, truth)
        row["error_rate"] = metrics.error_rate
        row["tpr"] = metrics.tpr
        row["fpr"] = metrics.fpr
        for g in range(spec.g_count):
            row[f"tpr_g{g + 1}"] = metrics.tpr_g[g]
            row[f"fpr_g{g + 1}"] = metrics.fpr_g[g]
        if baseline_fn is not None:
            predictor = baseline_fn(train)
            row["baseline_error"] = float(np.mean(predictor.predict(test.x) != test.y))
        row["status"] = "ok"
    except Exception as exc:  # record the failure, keep the run going
        row["status"] = f"error:{type(exc).__name__}"
    return row


def run_benchmark(
    spec: SimulationSpec,
    pen: PenaltySpec | None = None,
    cv: CvConfig | None = None,
    baseline_fn: Callable | None = None,
    workers: int = 1,
    measure_time: bool = False,
) -> list[dict]:
    """Run all replications of ``spec`` and return one row dict per rep.

    Exactly one of ``pen`` (fixed penalty) or ``cv`` (cross-validated
    penalty) must be given.  Failures in individual replications are
    recorded in the row's ``status`` and leave the other fields empty.
    Rows are ordered by replication index regardless of ``workers``;
    ``fit_ms`` stays empty unless ``measure_time`` is set, keeping output
    bytes reproducible.
    """
    if (pen is None) == (cv is None):
        raise InvalidInput("run_benchmark: exactly one of pen or cv must be given")
    args = [(spec, rep, pen, cv, baseline_fn, measure_time) for rep in range(spec.reps)]
    if workers > 1 and spec.reps > 1:
        with ProcessPoolExecutor(max_workers=min(workers, spec.reps)) as pool:
            rows = list(pool.map(_run_replication_args, args))
    else:
        rows = [_run_replication(*a) for a in args]
    return sorted(rows, key=lambda r: r["rep"])


def _run_replication_args(args) -> dict:
    return _run_replication(*args)


__all__ = [
    "RNG_SCHEME",
    "BlockAutocorrelation",
    "BlockEquicorrelation",
    "BlockModel",
    "CovarianceFamily",
    "Metrics",
    "ModelDefinition",
    "SimulationSpec",
    "Spiked",
    "benchmark_columns",
    "evaluate",
    "family_signal_indices",
    "make_covariance",
    "model_spec",
    "run_benchmark",
    "sample",
]
