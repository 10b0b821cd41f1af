"""Sampling-set selection: randomized greedy, exact greedy, exhaustive search
and random baselines.

Every sampler returns a :class:`SamplingResult`. Ties between equal gains
(or equal relaxed weights) always go to the lowest node index, which makes
randomized greedy with ``epsilon = exp(-k)`` identical to plain greedy.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .estimator import add_node, direct_covariance, init_state, marginal_gains, state_for
from .signal import SignalModel, make_rng

BRUTE_FORCE_LIMIT = 10**6

METHODS = (
    "randomized_greedy",
    "greedy",
    "brute_force",
    "uniform_random",
    "leverage_score",
    "relaxation_rounded",
)


@dataclass
class SamplingResult:
    s: tuple
    mse: float
    f_value: float
    gain_evaluations: int
    elapsed: float
    seed: int | None
    method: str
    extra: dict = field(default_factory=dict)


def _check_budget(k, model):
    if not 1 <= k <= model.n:
        raise ValueError(f"budget must lie in [1, {model.n}], got {k}")


def batch_size(n: int, k: int, epsilon: float) -> int:
    """Candidates examined per iteration, ``ceil((n/k) ln(1/epsilon))``,
    before clamping to the remaining pool."""
    return max(1, math.ceil((n / k) * math.log(1.0 / epsilon)))


def _best(state, cand, model):
    # Candidates are sorted, so argmax's first hit is the lowest node index.
    gains = marginal_gains(state, cand, model)
    return int(cand[int(np.argmax(gains))])


def randomized_greedy(model: SignalModel, k: int, epsilon: float, seed) -> SamplingResult:
    """Greedy selection over a random candidate batch per iteration.

    Each of the ``k`` iterations draws ``ceil((n/k) ln(1/epsilon))`` nodes
    (at most all remaining ones) uniformly without replacement, adds the
    one with the largest marginal gain, and downdates the covariance.
    """
    _check_budget(k, model)
    if not math.exp(-k) * (1 - 1e-12) <= epsilon < 1.0:
        raise ValueError(f"epsilon must lie in [exp(-k), 1), got {epsilon}")
    n = model.n
    s_batch = batch_size(n, k, epsilon)
    rng = make_rng(seed)
    pool = np.arange(n)
    size = n

    def pick():
        nonlocal size
        m = min(s_batch, size)
        if m == size:
            return pool[:size].copy()
        # Partial Fisher-Yates: the first m slots of pool become the batch.
        for i in range(m):
            r = i + int(rng.integers(size - i))
            pool[i], pool[r] = pool[r], pool[i]
        return pool[:m].copy()

    state = init_state(model)
    evaluations = 0
    start = time.perf_counter()
    for _ in range(k):
        cand = np.sort(pick())
        evaluations += cand.size
        j = _best(state, cand, model)
        state = add_node(state, j, model)
        # Swap the chosen node out of the active prefix of the pool.
        pos = int(np.flatnonzero(pool[:size] == j)[0])
        size -= 1
        pool[pos], pool[size] = pool[size], pool[pos]
    elapsed = time.perf_counter() - start
    return SamplingResult(
        s=state.s, mse=state.mse, f_value=state.f_value, gain_evaluations=evaluations,
        elapsed=elapsed, seed=int(seed), method="randomized_greedy",
        extra={"epsilon": epsilon, "batch_size": s_batch},
    )


def greedy(model: SignalModel, k: int) -> SamplingResult:
    """Exact greedy: every remaining node is scored at each step."""
    _check_budget(k, model)
    start = time.perf_counter()
    state = init_state(model)
    remaining = np.ones(model.n, dtype=bool)
    evaluations = 0
    for _ in range(k):
        cand = np.flatnonzero(remaining)
        evaluations += cand.size
        j = _best(state, cand, model)
        state = add_node(state, j, model)
        remaining[j] = False
    elapsed = time.perf_counter() - start
    return SamplingResult(
        s=state.s, mse=state.mse, f_value=state.f_value, gain_evaluations=evaluations,
        elapsed=elapsed, seed=None, method="greedy",
    )


def brute_force(model: SignalModel, k: int) -> SamplingResult:
    """Minimum-MSE set of size ``k`` by enumerating all subsets.

    Guarded to at most 10**6 subsets. Ties resolve to the lexicographically
    smallest subset.
    """
    _check_budget(k, model)
    count = math.comb(model.n, k)
    if count > BRUTE_FORCE_LIMIT:
        raise ValueError(f"C({model.n}, {k}) = {count} subsets exceeds {BRUTE_FORCE_LIMIT}")
    start = time.perf_counter()
    best, best_val = None, math.inf
    for combo in itertools.combinations(range(model.n), k):
        val = float(np.trace(direct_covariance(combo, model)))
        if val < best_val:
            best, best_val = combo, val
    elapsed = time.perf_counter() - start
    return SamplingResult(
        s=tuple(best), mse=best_val, f_value=float(np.trace(model.p)) - best_val,
        gain_evaluations=0, elapsed=elapsed, seed=None, method="brute_force",
        extra={"subsets": count},
    )


def _finish(model, s, method, seed, start, extra=None):
    state = state_for(s, model)
    return SamplingResult(
        s=state.s, mse=state.mse, f_value=state.f_value, gain_evaluations=0,
        elapsed=time.perf_counter() - start, seed=None if seed is None else int(seed),
        method=method, extra=extra or {},
    )


def uniform_random(model: SignalModel, k: int, seed) -> SamplingResult:
    _check_budget(k, model)
    start = time.perf_counter()
    rng = make_rng(seed)
    s = rng.choice(model.n, size=k, replace=False)
    return _finish(model, [int(i) for i in s], "uniform_random", seed, start)


def leverage_scores(model: SignalModel) -> np.ndarray:
    """Squared row norms of U; they sum to k for orthonormal columns."""
    return np.einsum("ij,ij->i", model.u, model.u)


def leverage_score(model: SignalModel, k: int, seed) -> SamplingResult:
    """Sequential sampling without replacement, proportional to leverage.

    Once every remaining node has zero leverage the leftover slots are
    filled uniformly.
    """
    _check_budget(k, model)
    start = time.perf_counter()
    rng = make_rng(seed)
    w = leverage_scores(model).copy()
    available = np.ones(model.n, dtype=bool)
    s = []
    for _ in range(k):
        weights = np.where(available, w, 0.0)
        total = weights.sum()
        if total > 0:
            j = int(rng.choice(model.n, p=weights / total))
        else:
            j = int(rng.choice(np.flatnonzero(available)))
        s.append(j)
        available[j] = False
    return _finish(model, s, "leverage_score", seed, start)


def relaxation_rounded(model: SignalModel, k: int, **solver_opts) -> SamplingResult:
    """Solve the convex relaxation and keep the ``k`` largest weights."""
    from .relaxation import round_top_k, solve_relaxation

    _check_budget(k, model)
    start = time.perf_counter()
    sol = solve_relaxation(model, k, **solver_opts)
    s = round_top_k(sol.z, k)
    return _finish(
        model, s, "relaxation_rounded", None, start,
        extra={"relaxed_objective": sol.objective, "iterations": sol.iterations,
               "converged": sol.converged},
    )


def run_method(name: str, model: SignalModel, k: int, seed=None, **params) -> SamplingResult:
    """Dispatch by method name (used by the CLI and experiment runner)."""
    if name == "randomized_greedy":
        return randomized_greedy(model, k, params.get("epsilon", 0.1), seed)
    if name == "greedy":
        return greedy(model, k)
    if name == "brute_force":
        return brute_force(model, k)
    if name == "uniform_random":
        return uniform_random(model, k, seed)
    if name == "leverage_score":
        return leverage_score(model, k, seed)
    if name == "relaxation_rounded":
        return relaxation_rounded(model, k, **params)
    raise ValueError(f"unknown method {name!r}; expected one of {', '.join(METHODS)}")
