"""Pearson correlation matrices and a cyclic Jacobi eigensolver.

The solver works on a stack of matrices at once so the Monte Carlo null can
push thousands of small matrices through it. Each matrix leaves the working
set as soon as it converges, so its result does not depend on which other
matrices shared the batch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from rmtsync.errors import ConvergenceError, DataError
from rmtsync.panel import GrowthPanel

OFF_DIAGONAL_TOL = 1e-12
MAX_SWEEPS = 100


def as_symmetric(m) -> np.ndarray:
    """Validate a square, finite, exactly symmetric matrix and return it as float64."""
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DataError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataError("matrix has non-finite entries")
    if not np.array_equal(a, a.T):
        raise DataError("matrix is not symmetric")
    return a


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    values: np.ndarray
    labels: tuple[str, ...]

    def __post_init__(self):
        a = as_symmetric(self.values)
        a.setflags(write=False)
        object.__setattr__(self, "values", a)
        object.__setattr__(self, "labels", tuple(self.labels))
        n = a.shape[0]
        if len(self.labels) != n:
            raise DataError(f"{len(self.labels)} labels for a {n}x{n} matrix")
        if np.max(np.abs(np.diag(a) - 1.0), initial=0.0) > 1e-12:
            raise DataError("correlation matrix diagonal must be 1")
        if np.any(np.abs(a) > 1.0):
            raise DataError("correlation entries must lie in [-1, 1]")

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenvalues in descending order; ``eigenvectors[k]`` pairs with ``eigenvalues[k]``.

    Vectors are stored as rows and flipped so each has a non-negative
    component sum.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def n(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v.T * self.eigenvalues) @ v


def standardize_columns(grid) -> np.ndarray:
    """Shift and scale each column to sample mean 0 and sample variance 1 (ddof=1)."""
    x = np.array(grid, dtype=float)
    if x.ndim != 2:
        raise DataError("expected a 2-D grid")
    if x.shape[0] < 2:
        raise DataError("need at least 2 rows to standardize")
    centered = x - x.mean(axis=0)
    sd = np.sqrt((centered**2).sum(axis=0) / (x.shape[0] - 1))
    scale = np.maximum(np.abs(x).max(axis=0), 1.0)
    flat = sd <= 1e-12 * scale
    if np.any(flat):
        raise DataError(f"constant column(s) at index {np.flatnonzero(flat).tolist()}")
    return centered / sd


def _corr_from_standardized(z: np.ndarray) -> np.ndarray:
    c = (z.T @ z) / (z.shape[0] - 1)
    c = 0.5 * (c + c.T)
    np.clip(c, -1.0, 1.0, out=c)
    np.fill_diagonal(c, 1.0)
    return c


def correlation_matrix(growth: GrowthPanel | np.ndarray, labels=None) -> CorrelationMatrix:
    """Pearson correlation between the columns of a growth panel (or a bare T x N grid)."""
    if isinstance(growth, GrowthPanel):
        x, labels = growth.values, growth.countries
    else:
        x = np.asarray(growth, dtype=float)
        if labels is None:
            labels = tuple(str(i) for i in range(x.shape[1]))
    if x.ndim != 2:
        raise DataError("expected a 2-D grid")
    if x.shape[0] < 3:
        raise DataError(f"need at least 3 observations, got {x.shape[0]}")
    if np.any(np.isnan(x)):
        raise DataError("growth grid contains missing values")
    return CorrelationMatrix(_corr_from_standardized(standardize_columns(x)), labels)


def trace(m) -> float:
    a = m.values if isinstance(m, CorrelationMatrix) else np.asarray(m, dtype=float)
    return float(np.trace(a))


def _rotation(app, aqq, apq):
    """tan of the Jacobi angle that zeroes apq; 0 where apq is already 0."""
    active = apq != 0.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        theta = (aqq - app) / (2.0 * apq)
        big = np.abs(theta) > 1e150
        sign = np.where(theta >= 0.0, 1.0, -1.0)
        t = np.where(big, 0.5 / theta, sign / (np.abs(theta) + np.sqrt(theta * theta + 1.0)))
    return np.where(active, t, 0.0)


def jacobi_batch(
    mats: np.ndarray,
    vectors: bool = True,
    tol: float = OFF_DIAGONAL_TOL,
    max_sweeps: int = MAX_SWEEPS,
):
    """Cyclic Jacobi on a stack of symmetric matrices of shape (B, n, n).

    Returns unsorted eigenvalues (B, n) and, if requested, eigenvector matrices
    (B, n, n) with eigenvectors in columns. A matrix is done when the Frobenius
    norm of its off-diagonal part is at most ``tol * max(1, ||A||_F)``.
    """
    a = np.array(mats, dtype=float)
    if a.ndim != 3 or a.shape[1] != a.shape[2]:
        raise DataError(f"expected a stack of square matrices, got shape {a.shape}")
    b, n, _ = a.shape
    v = np.broadcast_to(np.eye(n), (b, n, n)).copy() if vectors else None
    iu, ju = np.triu_indices(n, 1)
    limit = tol * np.maximum(1.0, np.sqrt(np.sum(a.reshape(b, -1) ** 2, axis=1)))

    pending = np.arange(b)
    for _ in range(max_sweeps + 1):
        off = np.sqrt(2.0 * np.sum(a[pending][:, iu, ju] ** 2, axis=1))
        pending = pending[off > limit[pending]]
        if pending.size == 0:
            break
        w = a[pending]
        wv = v[pending] if vectors else None
        for p, q in zip(iu, ju):
            app = w[:, p, p]
            aqq = w[:, q, q]
            apq = w[:, p, q].copy()
            t = _rotation(app, aqq, apq)
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            new_pp = app - t * apq
            new_qq = aqq + t * apq
            cc, ss = c[:, None], s[:, None]
            rp = w[:, p, :].copy()
            rq = w[:, q, :].copy()
            w[:, p, :] = cc * rp - ss * rq
            w[:, q, :] = ss * rp + cc * rq
            kp = w[:, :, p].copy()
            kq = w[:, :, q].copy()
            w[:, :, p] = cc * kp - ss * kq
            w[:, :, q] = ss * kp + cc * kq
            w[:, p, p] = new_pp
            w[:, q, q] = new_qq
            hit = t != 0.0
            w[:, p, q] = np.where(hit, 0.0, apq)
            w[:, q, p] = w[:, p, q]
            if vectors:
                vp = wv[:, :, p].copy()
                vq = wv[:, :, q].copy()
                wv[:, :, p] = cc * vp - ss * vq
                wv[:, :, q] = ss * vp + cc * vq
        a[pending] = w
        if vectors:
            v[pending] = wv
    else:
        raise ConvergenceError(f"Jacobi did not converge within {max_sweeps} sweeps")

    evals = np.diagonal(a, axis1=1, axis2=2).copy()
    return (evals, v) if vectors else evals


def _normalize_sign(vec: np.ndarray) -> np.ndarray:
    total = vec.sum()
    if total < 0:
        return -vec
    if total == 0:
        nz = np.flatnonzero(vec)
        if nz.size and vec[nz[0]] < 0:
            return -vec
    return vec


def eigen_symmetric(m) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Eigenvalues are sorted descending with ties kept in original index order.
    Each eigenvector is flipped so its component sum is non-negative (first
    non-zero component positive when the sum is exactly zero).
    """
    a = m.values if isinstance(m, CorrelationMatrix) else as_symmetric(m)
    evals, evecs = jacobi_batch(a[None, :, :], vectors=True)
    evals, evecs = evals[0], evecs[0]
    order = np.argsort(-evals, kind="stable")
    rows = np.array([_normalize_sign(evecs[:, k]) for k in order]).reshape(len(order), -1)
    ev = evals[order]
    ev.setflags(write=False)
    rows.setflags(write=False)
    return EigenDecomposition(eigenvalues=ev, eigenvectors=rows)
