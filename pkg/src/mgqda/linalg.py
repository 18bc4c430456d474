"""Dense symmetric linear-algebra primitives.

Everything here is eigendecomposition based so that singular positive
semidefinite matrices (rank-deficient projected covariances, degenerate
simulation covariances) go through the same code path as invertible ones:
the pseudoinverse and log-pseudodeterminant truncate the spectrum at a
relative cutoff, and the factorization routine accepts exactly singular
inputs where a Cholesky would fail.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .exceptions import InvalidInput, NotPSD

# Eigenvalues below rank_tol_factor * dim * (largest eigenvalue) are treated
# as zero when inverting or taking pseudodeterminants.
DEFAULT_RANK_TOL = 1e-12

# Relative slack allowed on the most negative eigenvalue before an input is
# rejected as not positive semidefinite.
_PSD_SLACK = 1e-8


def symmetrize(a: NDArray) -> NDArray:
    """Return a copy of ``a`` made exactly symmetric by reflecting its lower triangle."""
    a = np.asarray(a, dtype=float)
    return np.tril(a) + np.tril(a, -1).T


def _check_square_finite(a, op: str) -> NDArray:
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidInput(f"{op}: expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput(f"{op}: matrix contains non-finite entries")
    return a


@dataclass(frozen=True)
class EigenDecomposition:
    """Spectral decomposition of a symmetric matrix.

    Attributes
    ----------
    values : ndarray, shape (d,)
        Eigenvalues in descending order.
    vectors : ndarray, shape (d, d)
        Orthonormal eigenvectors; column ``i`` pairs with ``values[i]``.
    """

    values: NDArray
    vectors: NDArray


def sym_eigen(a: NDArray) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix, eigenvalues descending.

    Parameters
    ----------
    a : ndarray, shape (d, d)
        Symmetric matrix with finite entries.  Only the lower triangle is
        referenced, so matrices that are symmetric up to round-off are fine.

    Returns
    -------
    EigenDecomposition
        Eigenvalues sorted descending with matching eigenvector columns.

    Raises
    ------
    InvalidInput
        If ``a`` is not square or contains non-finite entries.
    """
    a = _check_square_finite(a, "sym_eigen")
    values, vectors = np.linalg.eigh(a)
    return EigenDecomposition(values=values[::-1].copy(), vectors=vectors[:, ::-1].copy())


def _spectral_cutoff(values: NDArray, rank_tol_factor: float) -> float:
    # values are descending; the cutoff is relative to the largest eigenvalue
    # and scales with dimension, mirroring standard rank-tolerance rules.
    top = max(float(values[0]), 0.0)
    return rank_tol_factor * values.shape[0] * top


def pseudo_inverse(a: NDArray, rank_tol_factor: float = DEFAULT_RANK_TOL) -> NDArray:
    """Moore-Penrose pseudoinverse of a symmetric matrix.

    Eigenvalues at or below ``rank_tol_factor * dim * max_eigenvalue`` are
    treated as zero.  The all-zero matrix maps to the all-zero matrix.

    Parameters
    ----------
    a : ndarray, shape (d, d)
        Symmetric matrix with finite entries.
    rank_tol_factor : float, optional
        Relative spectral cutoff factor.

    Returns
    -------
    ndarray, shape (d, d)
        Exactly symmetric pseudoinverse.
    """
    eig = sym_eigen(a)
    tau = _spectral_cutoff(eig.values, rank_tol_factor)
    keep = eig.values > tau
    inv_vals = np.where(keep, 1.0 / np.where(keep, eig.values, 1.0), 0.0)
    out = (eig.vectors * inv_vals) @ eig.vectors.T
    return symmetrize(out)


def pseudo_det(a: NDArray, rank_tol_factor: float = DEFAULT_RANK_TOL) -> float:
    """Log pseudodeterminant: sum of logs of eigenvalues above the rank cutoff.

    Returns 0.0 when no eigenvalue survives the cutoff (empty product).

    Parameters
    ----------
    a : ndarray, shape (d, d)
        Symmetric matrix with finite entries.
    rank_tol_factor : float, optional
        Relative spectral cutoff factor.

    Returns
    -------
    float
        ``sum(log(lambda_i))`` over eigenvalues ``lambda_i`` above the cutoff.
    """
    eig = sym_eigen(a)
    tau = _spectral_cutoff(eig.values, rank_tol_factor)
    kept = eig.values[eig.values > tau]
    if kept.size == 0:
        return 0.0
    return float(np.sum(np.log(kept)))


def pinv_logpdet(
    a: NDArray, rank_tol_factor: float = DEFAULT_RANK_TOL
) -> tuple[NDArray, float]:
    """Pseudoinverse and log pseudodeterminant from a single eigendecomposition.

    Equivalent to ``(pseudo_inverse(a), pseudo_det(a))`` but factorizes once.
    """
    eig = sym_eigen(a)
    tau = _spectral_cutoff(eig.values, rank_tol_factor)
    keep = eig.values > tau
    inv_vals = np.where(keep, 1.0 / np.where(keep, eig.values, 1.0), 0.0)
    pinv = symmetrize((eig.vectors * inv_vals) @ eig.vectors.T)
    kept = eig.values[keep]
    logpdet = float(np.sum(np.log(kept))) if kept.size else 0.0
    return pinv, logpdet


def psd_factor(a: NDArray) -> NDArray:
    """Square factor ``L`` of a positive semidefinite matrix with ``L @ L.T == a``.

    Built from the eigendecomposition as ``V * sqrt(max(values, 0))``, so
    exactly singular inputs are accepted.  Small negative eigenvalues from
    round-off are clipped to zero.

    Parameters
    ----------
    a : ndarray, shape (d, d)
        Symmetric positive semidefinite matrix (up to round-off).

    Returns
    -------
    ndarray, shape (d, d)
        Factor ``L`` such that ``L @ L.T`` reconstructs ``a``.

    Raises
    ------
    NotPSD
        If the most negative eigenvalue is below ``-1e-8 * max_eigenvalue``.
    """
    eig = sym_eigen(a)
    top = max(float(eig.values[0]), 0.0)
    if float(eig.values[-1]) < -_PSD_SLACK * top:
        raise NotPSD(
            f"psd_factor: minimum eigenvalue {eig.values[-1]:.3e} below "
            f"-{_PSD_SLACK:.0e} * {top:.3e}"
        )
    return eig.vectors * np.sqrt(np.clip(eig.values, 0.0, None))


__all__ = [
    "DEFAULT_RANK_TOL",
    "EigenDecomposition",
    "sym_eigen",
    "pseudo_inverse",
    "pseudo_det",
    "pinv_logpdet",
    "psd_factor",
    "symmetrize",
]
