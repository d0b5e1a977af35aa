"""Joint unnormalized log posterior of (inclusion vector, DAG).

The score decomposes into four additive parts:

* the graph-coupled inclusion prior,
* the edge-inclusion prior of the DAG,
* the posterior-vs-prior normalizer ratio of the Cholesky-factor law
  (carries all evidence the covariates hold about the DAG),
* the integrated likelihood of the response under the selected columns.

Given the inclusion vector, both the normalizer ratio and the edge prior
factor over DAG columns, so exhaustive enumeration and per-column
sampler moves only ever touch one column at a time.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .dag_wishart import ColumnZDeltaCache
from .errors import DimensionError, EnumerationLimitError
from .graphs import Dag, adjacency, log_prior_dag
from .simdata import Dataset
from .spike_slab import Hyperparameters, log_mrf_prior
from .spike_slab import _log_marginal_from_stats


@dataclass(frozen=True)
class JointScore:
    """Named score components; the total is their exact float sum."""

    log_gamma_prior: float
    log_dag_prior: float
    delta_log_z: float
    log_marginal: float

    @property
    def log_score(self) -> float:
        return self.log_gamma_prior + self.log_dag_prior + self.delta_log_z + self.log_marginal


class ScoreEngine:
    """Per-dataset caches for repeated scoring of (gamma, DAG) pairs.

    Holds the prior and posterior scale matrices, the memoized per-column
    normalizer deltas, and a memo of integrated likelihood values keyed
    by the selected index tuple.  All methods are pure given the dataset,
    so concurrent use is safe.
    """

    def __init__(self, data: Dataset, hyper: Hyperparameters):
        p = data.p
        U = hyper.U if hyper.U is not None else np.eye(p)
        U = np.asarray(U, dtype=float)
        if U.shape != (p, p):
            raise DimensionError(f"scale matrix shape {U.shape} does not match p={p}")
        self.data = data
        self.hyper = hyper
        self.p = p
        self.R = hyper.effective_R(p)
        self.U = U
        self.zcache = ColumnZDeltaCache(U, U + data.gram, data.n, hyper.alpha_offset)
        self.log_q = math.log(hyper.q)
        self.log_1mq = math.log1p(-hyper.q)
        self._marginal_memo: dict[tuple[int, ...], float] = {}

    def col_delta(self, i: int, parents: tuple[int, ...]) -> float:
        return self.zcache.delta(i, parents)

    def col_log_prior(self, c: int, nu: int) -> float:
        """Edge-prior contribution of column c with nu parents (no bound check)."""
        k = self.p - 1 - c
        return nu * self.log_q + (k - nu) * self.log_1mq

    def marginal(self, active: tuple[int, ...]) -> float:
        """Integrated response likelihood for the given active index tuple."""
        val = self._marginal_memo.get(active)
        if val is None:
            data = self.data
            if active:
                idx = np.fromiter(active, dtype=np.intp, count=len(active))
                gram = data.gram[np.ix_(idx, idx)]
                xty = data.xty[idx]
            else:
                gram = np.zeros((0, 0))
                xty = np.zeros(0)
            val = _log_marginal_from_stats(gram, xty, data.yty, data.n, self.hyper)
            self._marginal_memo[active] = val
        return val


def _annotated(component: str, exc: Exception) -> Exception:
    exc.args = (f"[{component}] {exc.args[0] if exc.args else ''}",) + exc.args[1:]
    return exc


def log_joint_score(
    gamma: np.ndarray,
    dag: Dag,
    data: Dataset,
    hyper: Hyperparameters,
    engine: ScoreEngine | None = None,
) -> JointScore:
    """Full unnormalized log posterior score of one (gamma, DAG) pair.

    Either complexity-bound violation yields a -inf component and hence a
    -inf total.  Numeric failures are re-raised with the failing
    component named.
    """
    g = np.asarray(gamma)
    if g.shape != (data.p,):
        raise DimensionError(f"gamma length {g.shape} does not match p={data.p}")
    if dag.p != data.p:
        raise DimensionError(f"dag has {dag.p} vertices but data has p={data.p}")
    if engine is None:
        engine = ScoreEngine(data, hyper)
    try:
        lgp = log_mrf_prior(g, adjacency(dag), hyper)
    except Exception as exc:  # pragma: no cover - annotation plumbing
        raise _annotated("log_gamma_prior", exc)
    try:
        ldp = log_prior_dag(dag, hyper.q, engine.R)
    except Exception as exc:  # pragma: no cover
        raise _annotated("log_dag_prior", exc)
    try:
        dlz = sum(engine.col_delta(i, dag.parents[i]) for i in range(dag.p))
    except Exception as exc:
        raise _annotated("delta_log_z", exc)
    try:
        lml = engine.marginal(tuple(int(j) for j in np.flatnonzero(g)))
    except Exception as exc:
        raise _annotated("log_marginal", exc)
    return JointScore(
        log_gamma_prior=lgp, log_dag_prior=ldp, delta_log_z=dlz, log_marginal=lml
    )


def check_condition_A(gamma0: np.ndarray, G0: np.ndarray) -> bool:
    """True when every edge of G0 joins two active variables."""
    g = np.asarray(gamma0).astype(bool)
    G0 = np.asarray(G0)
    if G0.shape != (g.shape[0], g.shape[0]):
        raise DimensionError(
            f"adjacency shape {G0.shape} does not match indicator length {g.shape[0]}"
        )
    both = np.outer(g, g)
    return not np.any((G0 != 0) & ~both)


def _lex_subsets(candidates: range, max_size: int) -> list[tuple[int, ...]]:
    """All subsets with fewer than max_size elements, sorted so that the
    resulting edge lists compare lexicographically."""
    subs = [
        s
        for r in range(min(max_size, len(candidates) + 1))
        for s in itertools.combinations(candidates, r)
    ]
    subs.sort()
    return subs


class PosteriorTable:
    """Exact normalized posterior over all admissible (gamma, DAG) pairs.

    The domain is every inclusion vector below the complexity bound
    crossed with every DAG whose largest column stays below the bound.
    Internally the table stores per-column score pieces (the DAG part of
    the score factors over columns given gamma), so normalizer, argmax,
    and point probabilities avoid materializing the full product space.
    ``entries()`` iterates the full domain on demand.
    """

    def __init__(self, data: Dataset, hyper: Hyperparameters, engine: ScoreEngine):
        p = data.p
        R = engine.R
        self.p = p
        self.R = R
        self.hyper = hyper
        self._b = hyper.b

        # Per-column admissible parent sets (lexicographic) and their
        # gamma-independent score terms.
        self.col_subsets: list[list[tuple[int, ...]]] = []
        self._col_terms: list[np.ndarray] = []
        self._col_index: list[dict[tuple[int, ...], int]] = []
        for c in range(p):
            subs = _lex_subsets(range(c + 1, p), R)
            terms = np.array(
                [engine.col_log_prior(c, len(s)) + engine.col_delta(c, s) for s in subs]
            )
            self.col_subsets.append(subs)
            self._col_terms.append(terms)
            self._col_index.append({s: k for k, s in enumerate(subs)})

        # Admissible inclusion vectors in lexicographic order.
        self.gammas: list[tuple[int, ...]] = [
            g for g in itertools.product((0, 1), repeat=p) if sum(g) < R
        ]
        self._gamma_index = {g: k for k, g in enumerate(self.gammas)}

        lse_totals = np.empty(len(self.gammas))
        best_score = -math.inf
        best = None
        self._gamma_base = np.empty(len(self.gammas))
        for k, g in enumerate(self.gammas):
            active = tuple(j for j in range(p) if g[j])
            base = -hyper.a * len(active) + engine.marginal(active)
            self._gamma_base[k] = base
            lse = base
            mx = base
            mx_cols = []
            for c in range(p):
                vals = self._coupled_terms(c, g)
                lse += logsumexp(vals)
                kbest = int(np.argmax(vals))  # first maximum: lexicographically smallest
                mx += vals[kbest]
                mx_cols.append(self.col_subsets[c][kbest])
            lse_totals[k] = lse
            if mx > best_score:
                best_score = mx
                best = (g, tuple(mx_cols))
        self._gamma_lse = lse_totals
        self.log_normalizer = float(logsumexp(lse_totals))
        assert best is not None
        self.argmax_gamma = np.array(best[0], dtype=np.int8)
        self.argmax_dag = Dag(p, best[1])
        self.argmax_log_score = float(best_score)

    def _coupled_terms(self, c: int, g: tuple[int, ...]) -> np.ndarray:
        """Column score terms including the graph-coupling bonus for gamma."""
        terms = self._col_terms[c]
        if self._b == 0.0 or not g[c]:
            return terms
        bonus = np.array(
            [2.0 * self._b * sum(g[j] for j in s) for s in self.col_subsets[c]]
        )
        return terms + bonus

    # -- queries ---------------------------------------------------------

    def log_score(self, gamma, dag: Dag) -> float:
        g = tuple(int(v) for v in gamma)
        k = self._gamma_index.get(g)
        if k is None:
            return -math.inf
        total = self._gamma_base[k]
        for c in range(self.p):
            idx = self._col_index[c].get(dag.parents[c])
            if idx is None:
                return -math.inf
            total += self._coupled_terms(c, g)[idx]
        return float(total)

    def log_prob(self, gamma, dag: Dag) -> float:
        return self.log_score(gamma, dag) - self.log_normalizer

    def prob(self, gamma, dag: Dag) -> float:
        return math.exp(self.log_prob(gamma, dag))

    def gamma_log_marginals(self) -> np.ndarray:
        """Log posterior mass of each admissible inclusion vector."""
        return self._gamma_lse - self.log_normalizer

    def variable_marginals(self) -> np.ndarray:
        """Posterior inclusion probability of each variable."""
        w = np.exp(self.gamma_log_marginals())
        out = np.zeros(self.p)
        for g, wk in zip(self.gammas, w):
            for j in range(self.p):
                if g[j]:
                    out[j] += wk
        return out

    @property
    def n_pairs(self) -> int:
        dags = 1
        for subs in self.col_subsets:
            dags *= len(subs)
        return len(self.gammas) * dags

    def entries(self):
        """Yield (gamma array, Dag, log_score, probability) over the domain."""
        for g in self.gammas:
            k = self._gamma_index[g]
            base = self._gamma_base[k]
            cols = [self._coupled_terms(c, g) for c in range(self.p)]
            for combo in itertools.product(*(range(len(s)) for s in self.col_subsets)):
                score = base + sum(cols[c][i] for c, i in enumerate(combo))
                dag = Dag(self.p, tuple(self.col_subsets[c][i] for c, i in enumerate(combo)))
                yield (
                    np.array(g, dtype=np.int8),
                    dag,
                    float(score),
                    math.exp(score - self.log_normalizer),
                )

    def to_csv(self, fh) -> None:
        """Stream the table as gamma-bitstring, edge list, log score, probability."""
        fh.write("gamma,dag_edges,log_score,probability\n")
        for g, dag, score, prob in self.entries():
            bits = "".join(str(int(v)) for v in g)
            edges = ";".join(f"{c + 1}-{j + 1}" for c, j in dag.edges())
            fh.write(f"{bits},{edges},{score!r},{prob!r}\n")


def enumerate_posterior(
    data: Dataset, hyper: Hyperparameters, limit: int = 6
) -> PosteriorTable:
    """Exhaustively normalized posterior table; refuses p above ``limit``."""
    if data.p > limit:
        raise EnumerationLimitError(
            f"enumeration over p={data.p} exceeds the limit of {limit}"
        )
    engine = ScoreEngine(data, hyper)
    return PosteriorTable(data, hyper, engine)
