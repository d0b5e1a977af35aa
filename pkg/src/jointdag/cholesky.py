"""Modified Cholesky factorization of precision matrices.

A positive definite matrix Omega factors uniquely as
``Omega = L @ diag(1/dvec) @ L.T`` with L unit lower-triangular and
dvec positive.  Off-diagonal zeros of L encode the DAG of the
corresponding Gaussian: ``L[i, j] != 0`` for i > j exactly when i is a
parent of j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotPositiveDefiniteError
from .graphs import Dag


@dataclass(frozen=True)
class CholeskyParam:
    """Unit lower-triangular factor L and positive diagonal vector dvec."""

    L: np.ndarray
    dvec: np.ndarray

    def __post_init__(self):
        L = np.asarray(self.L, dtype=float)
        d = np.asarray(self.dvec, dtype=float)
        if L.ndim != 2 or L.shape[0] != L.shape[1]:
            raise ValueError("L must be square")
        if d.shape != (L.shape[0],):
            raise ValueError("dvec length must match L")
        if np.any(np.triu(L, 1) != 0.0):
            raise ValueError("L must be lower triangular")
        if np.any(np.diag(L) != 1.0):
            raise ValueError("L must have a unit diagonal")
        if np.any(d <= 0.0) or not np.all(np.isfinite(d)):
            raise ValueError("dvec entries must be positive and finite")
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "dvec", d)

    @property
    def p(self) -> int:
        return self.L.shape[0]


def modified_cholesky(omega: np.ndarray) -> CholeskyParam:
    """Factor a symmetric positive definite matrix as L diag(1/dvec) L^T.

    The factor is obtained from the standard lower Cholesky decomposition
    C C^T by normalizing each column of C; uniqueness of both
    factorizations makes the results identical.
    """
    A = np.asarray(omega, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("omega must be square")
    if not np.allclose(A, A.T, rtol=1e-10, atol=1e-12):
        raise ValueError("omega must be symmetric")
    try:
        C = np.linalg.cholesky((A + A.T) / 2.0)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError("omega is not positive definite") from exc
    diag = np.diag(C).copy()
    L = C / diag[np.newaxis, :]
    dvec = 1.0 / diag**2
    return CholeskyParam(L=L, dvec=dvec)


def reconstruct_precision(param: CholeskyParam) -> np.ndarray:
    """Rebuild the precision matrix L diag(1/dvec) L^T."""
    return (param.L / param.dvec[np.newaxis, :]) @ param.L.T


def sparsity_dag(param: CholeskyParam, tol: float = 1e-10) -> Dag:
    """DAG read off the factor: i parents j when ``|L[i, j]| > tol``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    p = param.p
    parents = tuple(
        tuple(i for i in range(j + 1, p) if abs(param.L[i, j]) > tol) for j in range(p)
    )
    return Dag(p, parents)
