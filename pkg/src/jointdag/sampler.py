"""Metropolis-within-Gibbs sampler over (inclusion vector, DAG).

Each sweep makes one add/delete move on the inclusion vector and then
one add/delete move on every DAG column.  Given the inclusion vector the
column targets are mutually independent, so column moves may be
evaluated concurrently and committed in column order with no change in
the result.

Reproducibility: a root seed derives one counter-based stream for the
inclusion moves and one per column, so the chain output is a pure
function of (data, hyperparameters, control) regardless of the worker
count.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InitializationError, InternalConsistencyError
from .graphs import Dag, adjacency, column_flip, log_prior_dag
from .scoring import ScoreEngine
from .simdata import Dataset
from .spike_slab import Hyperparameters, log_marginal_likelihood, log_mrf_prior

_LOG_HALF = math.log(0.5)


class _Stream:
    """Buffered uniform draws from one counter-based bit generator."""

    __slots__ = ("_gen", "_buf", "_i")
    _BLOCK = 1024

    def __init__(self, seedseq):
        self._gen = np.random.Generator(np.random.Philox(seedseq))
        self._buf = self._gen.random(self._BLOCK).tolist()
        self._i = 0

    def random(self) -> float:
        i = self._i
        if i == self._BLOCK:
            self._buf = self._gen.random(self._BLOCK).tolist()
            i = 0
        self._i = i + 1
        return self._buf[i]


class ChainStreams:
    """Independent random streams: one for the inclusion vector, one per
    DAG column, and one for choosing columns in single-move mode."""

    def __init__(self, seed: int, p: int):
        kids = np.random.SeedSequence(seed).spawn(p + 2)
        self.gamma = _Stream(kids[0])
        self.columns = [_Stream(kids[c + 1]) for c in range(p)]
        self.chooser = _Stream(kids[p + 1])


class _SharedStream:
    """Adapter presenting a single generator under the stream-set layout."""

    def __init__(self, rng):
        self.gamma = rng
        self.columns = _ConstList(rng)
        self.chooser = rng


class _ConstList:
    def __init__(self, rng):
        self._rng = rng

    def __getitem__(self, _):
        return self._rng


# ---------------------------------------------------------------------------
# Proposal kernels


def propose_gamma(gamma: np.ndarray, rng):
    """Add/delete proposal on the inclusion vector.

    With probability 1/2 a uniformly chosen active coordinate is cleared,
    otherwise a uniformly chosen inactive coordinate is set; when only
    one direction exists it is taken with probability 1.  Returns the new
    vector together with the forward and reverse log kernel
    probabilities.
    """
    g = np.asarray(gamma)
    p = g.shape[0]
    ones = np.flatnonzero(g)
    k1 = ones.shape[0]
    k0 = p - k1
    if k1 == 0:
        do_delete = False
        lqf = -math.log(k0)
    elif k0 == 0:
        do_delete = True
        lqf = -math.log(k1)
    else:
        do_delete = rng.random() < 0.5
        lqf = _LOG_HALF - math.log(k1 if do_delete else k0)
    new = g.copy()
    if do_delete:
        k = int(ones[int(rng.random() * k1)])
        new[k] = 0
        n1 = k1 - 1
        lqr = -math.log(p - n1) if n1 == 0 else _LOG_HALF - math.log(p - n1)
    else:
        zeros = np.flatnonzero(g == 0)
        k = int(zeros[int(rng.random() * k0)])
        new[k] = 1
        n1 = k1 + 1
        lqr = -math.log(n1) if n1 == p else _LOG_HALF - math.log(n1)
    return new, float(lqf), float(lqr)


def _propose_in_column(parents: tuple[int, ...], c: int, p: int, rng):
    """Add/delete proposal on the parent set of column c.

    Returns (toggled vertex, is_add, new parent count, new parent tuple,
    forward log prob, reverse log prob).
    """
    nu = len(parents)
    K = p - 1 - c
    if nu == 0:
        is_add = True
        lqf = -math.log(K)
    elif nu == K:
        is_add = False
        lqf = -math.log(nu)
    elif rng.random() < 0.5:
        is_add = False
        lqf = _LOG_HALF - math.log(nu)
    else:
        is_add = True
        lqf = _LOG_HALF - math.log(K - nu)
    if is_add:
        nu2 = nu + 1
        base = c + 1
        while True:  # uniform over absent candidates by rejection
            j = base + int(rng.random() * K)
            if j not in parents:
                break
        new_pa = tuple(sorted(parents + (j,)))
        lqr = -math.log(nu2) if nu2 == K else _LOG_HALF - math.log(nu2)
    else:
        j = parents[int(rng.random() * nu)]
        nu2 = nu - 1
        new_pa = tuple(x for x in parents if x != j)
        lqr = -math.log(K - nu2) if nu2 == 0 else _LOG_HALF - math.log(K - nu2)
    return j, is_add, nu2, new_pa, lqf, lqr


def propose_dag_column(dag: Dag, i: int, rng):
    """Column add/delete proposal; the last vertex yields a no-op with a
    zero kernel ratio."""
    if not 0 <= i < dag.p:
        raise ValueError(f"column {i} out of range for p={dag.p}")
    if i == dag.p - 1:
        return dag, 0.0, 0.0
    j, _, _, _, lqf, lqr = _propose_in_column(dag.parents[i], i, dag.p, rng)
    return column_flip(dag, i, j), lqf, lqr


# ---------------------------------------------------------------------------
# Chain state


class ChainState:
    """Mutable sampler state with incrementally maintained score parts.

    The cached components always match a fresh scoring call up to float
    drift; ``check_state_consistency`` verifies and refreshes them.
    """

    __slots__ = (
        "engine",
        "p",
        "R",
        "a_pen",
        "b2",
        "dprior_add",
        "gamma_arr",
        "gamma_list",
        "active",
        "parents",
        "children",
        "col_dlz",
        "n_edges",
        "mrf_log",
        "dag_prior_log",
        "dlz_total",
        "marginal_log",
        "iteration",
        "gamma_accepts",
        "gamma_proposals",
        "col_accepts",
        "col_proposals",
    )

    def __init__(self, engine: ScoreEngine, gamma: np.ndarray, parents: list[tuple[int, ...]]):
        hyper = engine.hyper
        p = engine.p
        self.engine = engine
        self.p = p
        self.R = engine.R
        self.a_pen = hyper.a
        self.b2 = 2.0 * hyper.b
        self.dprior_add = engine.log_q - engine.log_1mq
        self.gamma_arr = np.asarray(gamma, dtype=np.int8).copy()
        self.gamma_list = [int(v) for v in self.gamma_arr]
        self.active = [int(j) for j in np.flatnonzero(self.gamma_arr)]
        self.parents = list(parents)
        self.children: list[set[int]] = [set() for _ in range(p)]
        for c, pa in enumerate(self.parents):
            for j in pa:
                self.children[j].add(c)
        self.n_edges = sum(len(pa) for pa in self.parents)
        self.col_dlz = [engine.col_delta(c, self.parents[c]) for c in range(p)]
        self.dlz_total = sum(self.col_dlz)
        dag = self.dag()
        self.mrf_log = log_mrf_prior(self.gamma_arr, adjacency(dag), hyper)
        self.dag_prior_log = log_prior_dag(dag, hyper.q, self.R)
        self.marginal_log = engine.marginal(tuple(self.active))
        self.iteration = 0
        self.gamma_accepts = 0
        self.gamma_proposals = 0
        self.col_accepts = [0] * max(p - 1, 0)
        self.col_proposals = [0] * max(p - 1, 0)

    def dag(self) -> Dag:
        return Dag(self.p, tuple(self.parents))

    def gamma(self) -> np.ndarray:
        return self.gamma_arr.copy()

    @property
    def log_score(self) -> float:
        return self.mrf_log + self.dag_prior_log + self.dlz_total + self.marginal_log


def init_state(
    data: Dataset,
    hyper: Hyperparameters,
    init="empty",
    corr_threshold: float = 0.25,
    engine: ScoreEngine | None = None,
) -> ChainState:
    """Build the starting state: empty model, a marginal-correlation
    warm start for the DAG, or an explicit (gamma, dag) pair."""
    if engine is None:
        engine = ScoreEngine(data, hyper)
    p = data.p
    if isinstance(init, tuple):
        gamma0, dag0 = init
        gamma = np.asarray(gamma0, dtype=np.int8)
        if gamma.shape != (p,) or dag0.p != p:
            raise DimensionError("init state dimensions do not match the data")
        parents = list(dag0.parents)
    elif init == "empty":
        gamma = np.zeros(p, dtype=np.int8)
        parents = [() for _ in range(p)]
    elif init == "corr":
        gamma = np.zeros(p, dtype=np.int8)
        parents = _corr_init(data, corr_threshold, engine.R)
    else:
        raise ValueError(f"unknown init mode {init!r}")
    state = ChainState(engine, gamma, parents)
    if not np.isfinite(state.log_score):
        raise InitializationError(
            f"initial state has non-finite score {state.log_score}"
        )
    return state


def _corr_init(data: Dataset, threshold: float, R: int) -> list[tuple[int, ...]]:
    """Per-column warm start: parents are the larger-indexed covariates whose
    marginal correlation with the column exceeds the threshold (strongest
    first, capped below the complexity bound)."""
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(data.X.T)
    corr = np.nan_to_num(corr)
    p = data.p
    parents = []
    for c in range(p):
        cand = [(abs(corr[c, j]), j) for j in range(c + 1, p) if abs(corr[c, j]) > threshold]
        cand.sort(reverse=True)
        keep = sorted(j for _, j in cand[: max(R - 1, 0)])
        parents.append(tuple(keep))
    return parents


# ---------------------------------------------------------------------------
# Sweeps


def _gamma_flip_parts(state: ChainState, k: int, adding: bool):
    """Score change from flipping variable k, with the pieces needed to commit."""
    if adding and len(state.active) + 1 >= state.R:
        return -math.inf, None, 0.0, 0.0
    glist = state.gamma_list
    nbr = sum(glist[j] for j in state.parents[k]) + sum(glist[j] for j in state.children[k])
    dmrf = (-state.a_pen + state.b2 * nbr) if adding else (state.a_pen - state.b2 * nbr)
    if adding:
        new_active = sorted(state.active + [k])
    else:
        new_active = [x for x in state.active if x != k]
    new_marg = state.engine.marginal(tuple(new_active))
    return dmrf + (new_marg - state.marginal_log), new_active, new_marg, dmrf


def gamma_flip_log_ratio(state: ChainState, k: int) -> float:
    """Log posterior ratio of flipping variable k (kernel terms excluded)."""
    return _gamma_flip_parts(state, k, not state.gamma_list[k])[0]


def _dag_delta(state: ChainState, c: int, j: int, is_add: bool, new_pa) -> tuple[float, float]:
    dlz_new = state.engine.zcache.delta(c, new_pa)
    d = dlz_new - state.col_dlz[c]
    d += state.dprior_add if is_add else -state.dprior_add
    glist = state.gamma_list
    if state.b2 != 0.0 and glist[c] and glist[j]:
        d += state.b2 if is_add else -state.b2
    return d, dlz_new


def dag_flip_log_ratio(state: ChainState, c: int, j: int) -> float:
    """Log posterior ratio of toggling candidate j in column c (no kernel terms)."""
    parents = state.parents[c]
    if j in parents:
        new_pa = tuple(x for x in parents if x != j)
        is_add = False
    else:
        if len(parents) + 1 >= state.R:
            return -math.inf
        new_pa = tuple(sorted(parents + (j,)))
        is_add = True
    return _dag_delta(state, c, j, is_add, new_pa)[0]


def _gamma_step(state: ChainState, stream, accum, sweep: int) -> bool:
    state.gamma_proposals += 1
    new_g, lqf, lqr = propose_gamma(state.gamma_arr, stream)
    k = int(np.flatnonzero(new_g != state.gamma_arr)[0])
    adding = bool(new_g[k])
    delta, new_active, new_marg, dmrf = _gamma_flip_parts(state, k, adding)
    if new_active is None:
        return False  # prior bound: zero-probability proposal
    d = delta + (lqr - lqf)
    if d < 0.0 and stream.random() >= math.exp(d):
        return False
    state.gamma_arr = new_g
    state.gamma_list[k] = 1 if adding else 0
    state.active = new_active
    state.mrf_log += dmrf
    state.marginal_log = new_marg
    state.gamma_accepts += 1
    if accum is not None:
        accum.var_flip(k, adding, sweep)
    return True


def _eval_column(state: ChainState, c: int, stream):
    """Propose and decide one column move without touching shared state."""
    parents = state.parents[c]
    j, is_add, nu2, new_pa, lqf, lqr = _propose_in_column(parents, c, state.p, stream)
    if is_add and nu2 >= state.R:
        return (c, j, is_add, parents, state.col_dlz[c], False)
    d, dlz_new = _dag_delta(state, c, j, is_add, new_pa)
    d += lqr - lqf
    accepted = d >= 0.0 or stream.random() < math.exp(d)
    return (c, j, is_add, new_pa, dlz_new, accepted)


def _commit_column(state: ChainState, decision, accum, sweep: int) -> int:
    c, j, is_add, new_pa, dlz_new, accepted = decision
    state.col_proposals[c] += 1
    if not accepted:
        return 0
    state.col_accepts[c] += 1
    state.parents[c] = new_pa
    state.dlz_total += dlz_new - state.col_dlz[c]
    state.col_dlz[c] = dlz_new
    state.dag_prior_log += state.dprior_add if is_add else -state.dprior_add
    glist = state.gamma_list
    if state.b2 != 0.0 and glist[c] and glist[j]:
        state.mrf_log += state.b2 if is_add else -state.b2
    if is_add:
        state.children[j].add(c)
        state.n_edges += 1
    else:
        state.children[j].discard(c)
        state.n_edges -= 1
    if accum is not None:
        accum.edge_flip(c, j, is_add, sweep)
    return 1


def _eval_chunk(state, lo, hi, columns):
    return [_eval_column(state, c, columns[c]) for c in range(lo, hi)]


def _sweep(state, streams, accum=None, executor=None, n_chunks=1, dag_moves="columns"):
    sweep = state.iteration + 1
    accepted_gamma = _gamma_step(state, streams.gamma, accum, sweep)
    n_col_accepts = 0
    n_cols = state.p - 1
    if n_cols > 0:
        if dag_moves == "single":
            c = int(streams.chooser.random() * n_cols)
            dec = _eval_column(state, c, streams.columns[c])
            n_col_accepts += _commit_column(state, dec, accum, sweep)
        elif executor is None:
            columns = streams.columns
            for c in range(n_cols):
                dec = _eval_column(state, c, columns[c])
                n_col_accepts += _commit_column(state, dec, accum, sweep)
        else:
            bounds = np.linspace(0, n_cols, n_chunks + 1).astype(int)
            futures = [
                executor.submit(_eval_chunk, state, int(lo), int(hi), streams.columns)
                for lo, hi in zip(bounds[:-1], bounds[1:])
                if hi > lo
            ]
            for fut in futures:
                for dec in fut.result():
                    n_col_accepts += _commit_column(state, dec, accum, sweep)
    state.iteration = sweep
    return accepted_gamma, n_col_accepts


def gibbs_sweep(state: ChainState, data: Dataset, hyper: Hyperparameters, rng) -> ChainState:
    """One full sweep, mutating and returning the state.

    ``rng`` may be a ChainStreams set (reproducible parallel layout) or
    any single generator with a ``random()`` method.
    """
    if data.p != state.p:
        raise DimensionError("data dimension does not match the chain state")
    streams = rng if isinstance(rng, ChainStreams) else _SharedStream(rng)
    _sweep(state, streams)
    return state


def check_state_consistency(state: ChainState, tol: float = 1e-6, refresh: bool = True) -> float:
    """Compare cached score parts against a from-scratch evaluation.

    Raises InternalConsistencyError beyond ``tol`` (a delta-update bug);
    otherwise optionally refreshes the caches to stop float drift and
    returns the largest absolute difference seen.
    """
    engine = state.engine
    hyper = engine.hyper
    data = engine.data
    dag = state.dag()
    fresh_mrf = log_mrf_prior(state.gamma_arr, adjacency(dag), hyper)
    fresh_dp = log_prior_dag(dag, hyper.q, state.R)
    fresh_dlz = sum(engine.col_delta(c, state.parents[c]) for c in range(state.p))
    idx = np.flatnonzero(state.gamma_arr)
    fresh_marg = log_marginal_likelihood(data.Y, data.X[:, idx], hyper)
    worst = max(
        abs(fresh_mrf - state.mrf_log),
        abs(fresh_dp - state.dag_prior_log),
        abs(fresh_dlz - state.dlz_total),
        abs(fresh_marg - state.marginal_log),
    )
    if worst > tol:
        raise InternalConsistencyError(
            f"cached score components diverged by {worst:.3e} at sweep {state.iteration}"
        )
    if refresh:
        state.mrf_log = fresh_mrf
        state.dag_prior_log = fresh_dp
        state.dlz_total = fresh_dlz
        state.marginal_log = fresh_marg
    return worst


# ---------------------------------------------------------------------------
# Accumulation over kept sweeps


class _Accumulators:
    """Streaming averages of inclusion indicators over kept snapshots.

    Snapshot t is the state after sweep t; snapshots with
    burnin < t <= iters are kept.  Indicators are integrated lazily from
    flip events, so a sweep with no flips costs nothing.
    """

    def __init__(self, p: int, burnin: int, iters: int):
        self.p = p
        self.burnin = burnin
        self.iters = iters
        self.var_cum = np.zeros(p)
        self.var_on: list[int | None] = [None] * p
        self.edge_cum: dict[tuple[int, int], int] = {}
        self.edge_on: dict[tuple[int, int], int] = {}

    def start(self, state: ChainState) -> None:
        for j in state.active:
            self.var_on[j] = 1
        for c, pa in enumerate(state.parents):
            for j in pa:
                self.edge_on[(c, j)] = 1

    def _window(self, on: int, last: int) -> int:
        lo = max(on, self.burnin + 1)
        return last - lo + 1 if last >= lo else 0

    def var_flip(self, j: int, now_on: bool, sweep: int) -> None:
        if now_on:
            self.var_on[j] = sweep
        else:
            on = self.var_on[j]
            self.var_on[j] = None
            self.var_cum[j] += self._window(on, sweep - 1)

    def edge_flip(self, c: int, j: int, now_on: bool, sweep: int) -> None:
        if now_on:
            self.edge_on[(c, j)] = sweep
        else:
            on = self.edge_on.pop((c, j))
            n = self._window(on, sweep - 1)
            if n:
                self.edge_cum[(c, j)] = self.edge_cum.get((c, j), 0) + n

    def finalize(self) -> None:
        for j, on in enumerate(self.var_on):
            if on is not None:
                self.var_cum[j] += self._window(on, self.iters)
                self.var_on[j] = None
        for key, on in self.edge_on.items():
            n = self._window(on, self.iters)
            if n:
                self.edge_cum[key] = self.edge_cum.get(key, 0) + n
        self.edge_on.clear()


# ---------------------------------------------------------------------------
# Chain driver


@dataclass
class ChainControl:
    """Run-length, seeding, and execution options for one chain."""

    iters: int = 10000
    burnin: int = 5000
    seed: int = 0
    workers: int = 1
    init: object = "empty"  # "empty" | "corr" | (gamma, dag)
    dag_moves: str = "columns"  # "columns" | "single"
    corr_threshold: float = 0.25
    spot_check_every: int = 1000
    trace: object = None  # path for line-delimited sweep records

    def __post_init__(self):
        if self.burnin < 0 or self.iters <= self.burnin:
            raise ValueError("need iters > burnin >= 0")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        if self.dag_moves not in ("columns", "single"):
            raise ValueError(f"unknown dag_moves mode {self.dag_moves!r}")


@dataclass
class ChainSummary:
    """Post-burn-in averages and acceptance diagnostics of one chain."""

    inclusion_probs: np.ndarray
    edge_probs: np.ndarray  # [child, parent] with parent > child
    gamma_acceptance: float
    dag_acceptance: np.ndarray  # per column; NaN where never proposed
    n_kept: int
    seed: int
    iters: int = 0
    burnin: int = 0
    final_log_score: float = field(default=math.nan)

    @property
    def p(self) -> int:
        return self.inclusion_probs.shape[0]


def run_chain(data: Dataset, hyper: Hyperparameters, control: ChainControl) -> ChainSummary:
    """Run one chain and average inclusion indicators over kept sweeps.

    Output is deterministic in (data, hyper, control.seed) for any
    worker count.
    """
    engine = ScoreEngine(data, hyper)
    state = init_state(
        data, hyper, init=control.init, corr_threshold=control.corr_threshold, engine=engine
    )
    streams = ChainStreams(control.seed, data.p)
    accum = _Accumulators(data.p, control.burnin, control.iters)
    accum.start(state)

    executor = None
    n_chunks = 1
    trace_fh = open(control.trace, "w") if control.trace else None
    try:
        if control.workers > 1 and data.p > 2:
            executor = ThreadPoolExecutor(max_workers=control.workers)
            n_chunks = control.workers
        for s in range(1, control.iters + 1):
            acc_g, acc_d = _sweep(
                state,
                streams,
                accum=accum,
                executor=executor,
                n_chunks=n_chunks,
                dag_moves=control.dag_moves,
            )
            if trace_fh is not None:
                trace_fh.write(
                    json.dumps(
                        {
                            "iter": s,
                            "size": len(state.active),
                            "edges": state.n_edges,
                            "log_score": state.log_score,
                            "accept_gamma": bool(acc_g),
                            "dag_accepts": acc_d,
                        }
                    )
                    + "\n"
                )
            if control.spot_check_every and s % control.spot_check_every == 0:
                check_state_consistency(state)
    finally:
        if executor is not None:
            executor.shutdown()
        if trace_fh is not None:
            trace_fh.close()
    check_state_consistency(state)
    accum.finalize()

    kept = control.iters - control.burnin
    inclusion = accum.var_cum / kept
    edge_probs = np.zeros((data.p, data.p))
    for (c, j), cnt in accum.edge_cum.items():
        edge_probs[c, j] = cnt / kept
    proposals = np.array(state.col_proposals, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        dag_acc = np.array(state.col_accepts, dtype=float) / proposals
    return ChainSummary(
        inclusion_probs=inclusion,
        edge_probs=edge_probs,
        gamma_acceptance=state.gamma_accepts / max(state.gamma_proposals, 1),
        dag_acceptance=dag_acc,
        n_kept=kept,
        seed=control.seed,
        iters=control.iters,
        burnin=control.burnin,
        final_log_score=state.log_score,
    )


def median_probability_model(summary: ChainSummary) -> tuple[np.ndarray, Dag]:
    """Variables and edges whose inclusion probability strictly exceeds 1/2."""
    gamma = (summary.inclusion_probs > 0.5).astype(np.int8)
    p = summary.p
    edges = [
        (c, j)
        for c in range(p)
        for j in range(c + 1, p)
        if summary.edge_probs[c, j] > 0.5
    ]
    return gamma, Dag.from_edges(p, edges)
