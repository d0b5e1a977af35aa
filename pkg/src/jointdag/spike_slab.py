"""Variable-inclusion prior and the integrated response likelihood.

An inclusion vector gamma selects columns of the design matrix.  Its
prior couples to the covariate graph through an Ising-type energy
``-a * sum(gamma) + b * gamma' G gamma`` truncated at the complexity
bound.  Coefficients carry a Gaussian slab with variance tau2 * sigma2
and integrate out in closed form, either with known noise variance or
under an inverse-gamma noise prior.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import DataError


@dataclass(frozen=True)
class Hyperparameters:
    """Model constants; defaults follow the benchmark configuration.

    ``sigma2 = None`` selects the unknown-variance model with an
    inverse-gamma(a0, b0) noise prior; setting ``sigma2`` to a positive
    number selects the known-variance model.  ``R = None`` resolves to
    the number of covariates at scoring time.  ``U = None`` means an
    identity scale matrix.
    """

    tau2: float = 1.0
    sigma2: float | None = None
    a0: float = 0.1
    b0: float = 0.01
    a: float = 2.75
    b: float = 0.5
    q: float = 0.005
    R: int | None = None
    alpha_offset: float = 10.0
    U: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.tau2 <= 0:
            raise ValueError(f"tau2 must be positive, got {self.tau2}")
        if self.sigma2 is not None and self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")
        if self.a0 <= 0 or self.b0 <= 0:
            raise ValueError("a0 and b0 must be positive")
        if self.a <= 0:
            raise ValueError(f"sparsity penalty a must be positive, got {self.a}")
        if self.b < 0:
            raise ValueError(f"smoothness b must be nonnegative, got {self.b}")
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"edge probability q must lie in (0, 1), got {self.q}")
        if self.R is not None and (int(self.R) != self.R or self.R < 0):
            raise ValueError(f"complexity bound R must be a nonnegative integer, got {self.R}")
        if self.alpha_offset <= 2:
            raise ValueError(f"alpha_offset must exceed 2, got {self.alpha_offset}")

    @property
    def known_variance(self) -> bool:
        return self.sigma2 is not None

    def effective_R(self, p: int) -> int:
        return p if self.R is None else int(self.R)


def log_mrf_prior(gamma: np.ndarray, G: np.ndarray, hyper: Hyperparameters) -> float:
    """Unnormalized log prior of the inclusion vector given the graph.

    Returns ``-a * |gamma| + b * gamma' G gamma`` while ``|gamma|`` stays
    below the complexity bound, else -inf.  G is symmetric, so every
    included edge contributes twice to the quadratic term.
    """
    g = np.asarray(gamma, dtype=float)
    G = np.asarray(G)
    p = g.shape[0]
    if G.shape != (p, p):
        raise ValueError(f"adjacency shape {G.shape} does not match gamma length {p}")
    if np.any(np.diag(G) != 0):
        raise ValueError("adjacency matrix must have a zero diagonal")
    if not np.array_equal(G, G.T):
        raise ValueError("adjacency matrix must be symmetric")
    size = float(g.sum())
    if size >= hyper.effective_R(p):
        return -math.inf
    return -hyper.a * size + hyper.b * float(g @ G @ g)


def submatrix(X: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Columns of X selected by gamma, in their original order."""
    X = np.asarray(X)
    g = np.asarray(gamma)
    if g.shape[0] != X.shape[1]:
        raise ValueError("gamma length must match the number of columns of X")
    return X[:, np.flatnonzero(g)]


def log_marginal_likelihood(Y: np.ndarray, Xg: np.ndarray, hyper: Hyperparameters) -> float:
    """Log likelihood of Y with the selected coefficients integrated out.

    Constants that do not depend on the selected model are dropped.  The
    determinant and quadratic form go through the k-dimensional route
    (k = number of selected columns):

        det(I_n + tau2 Xg Xg') = det(I_k + tau2 Xg' Xg)
        Y' (I_n + tau2 Xg Xg')^-1 Y
            = Y'Y - tau2 * (Xg'Y)' (I_k + tau2 Xg' Xg)^-1 (Xg'Y)
    """
    Y = np.asarray(Y, dtype=float)
    Xg = np.asarray(Xg, dtype=float)
    if Y.ndim != 1:
        raise ValueError("Y must be a vector")
    if Xg.ndim != 2 or Xg.shape[0] != Y.shape[0]:
        raise ValueError("Xg must be n x k with n matching Y")
    if not np.all(np.isfinite(Y)) or not np.all(np.isfinite(Xg)):
        raise DataError("Y and Xg must be finite")
    gram = Xg.T @ Xg
    xty = Xg.T @ Y
    yty = float(Y @ Y)
    return _log_marginal_from_stats(gram, xty, yty, Y.shape[0], hyper)


def _log_marginal_from_stats(
    gram: np.ndarray, xty: np.ndarray, yty: float, n: int, hyper: Hyperparameters
) -> float:
    k = gram.shape[0]
    if k == 0:
        logdet = 0.0
        quad = yty
    else:
        M = hyper.tau2 * gram + np.eye(k)
        chol = cho_factor(M, lower=True)
        logdet = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
        quad = yty - hyper.tau2 * float(xty @ cho_solve(chol, xty))
    if hyper.known_variance:
        return -0.5 * logdet - quad / (2.0 * hyper.sigma2)
    return -0.5 * logdet - 0.5 * (n + 2.0 * hyper.a0) * math.log(hyper.b0 + 0.5 * quad)
