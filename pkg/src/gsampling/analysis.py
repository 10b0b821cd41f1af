"""Curvature of the MSE-reduction set function and empirical checks of the
randomized-greedy approximation guarantees."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .estimator import add_node, init_state, marginal_gains
from .samplers import batch_size, brute_force, randomized_greedy
from .signal import SignalModel, derive_seed
from .spectral import BasisSource, eig_symmetric

log = logging.getLogger(__name__)

PAC_CONSTANT = 0.088
EXACT_CURVATURE_MAX_N = 12
ZERO_GAIN = 1e-14


@dataclass
class BoundReport:
    bound: str
    alpha: float
    c: float
    beta: float
    epsilon: float
    k: int
    n: int
    s_batch: int
    curvature_bound: float
    exact_curvature: float | None
    trace_p: float
    trace_opt: float
    rhs: float
    trials: int
    mean: float
    std_error: float
    satisfied: bool
    violation_fraction: float | None = None
    allowed_fraction: float | None = None
    traces: list = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("traces")
        return d


def curvature_bound(model: SignalModel) -> float:
    """Upper bound on the maximum element-wise curvature from the extreme
    eigenvalues of P: ``(lmax/lmin)^2 (1 + lmax/sigma2)^3``."""
    w = eig_symmetric(model.p, BasisSource.ADJACENCY).eigenvalues
    lmax, lmin = float(w[0]), float(w[-1])
    if lmin <= 0:
        raise ValueError("covariance is singular")
    return (lmax / lmin) ** 2 * (1.0 + lmax / model.sigma2) ** 3


def _all_gains(model):
    """Marginal gains f_i(S) for every subset S (bitmask) and node i.

    Entries with i in S are NaN.
    """
    n = model.n
    gains = np.full((1 << n, n), np.nan)
    states = [None] * (1 << n)
    states[0] = init_state(model)
    nodes = np.arange(n)
    for mask in range(1 << n):
        if mask:
            top = mask.bit_length() - 1
            states[mask] = add_node(states[mask ^ (1 << top)], top, model)
        outside = nodes[[(mask >> i) & 1 == 0 for i in range(n)]]
        if outside.size:
            gains[mask, outside] = marginal_gains(states[mask], outside, model)
    return gains


def exact_curvature(model: SignalModel, return_skipped=False):
    """Maximum of ``f_i(T) / f_i(S)`` over ``S`` a proper subset of ``T``
    and ``i`` outside ``T``, by enumeration (n <= 12).

    Pairs whose denominator gain is at most 1e-14 are skipped; pass
    ``return_skipped=True`` to also get how many subsets were excluded.
    """
    n = model.n
    if n > EXACT_CURVATURE_MAX_N:
        raise ValueError(f"exact curvature enumeration limited to n <= {EXACT_CURVATURE_MAX_N}")
    gains = _all_gains(model)
    denom = np.where(gains > ZERO_GAIN, gains, np.inf)
    skipped = int(np.count_nonzero(~np.isnan(gains) & (gains <= ZERO_GAIN)))

    # low[X, i] = min of denom over all subsets of X, built one bit at a time.
    low = denom.copy()
    for b in range(n):
        bit = 1 << b
        for mask in range(1 << n):
            if mask & bit:
                np.minimum(low[mask], low[mask ^ bit], out=low[mask])

    best = 0.0
    for t in range(1, 1 << n):
        # Smallest denominator over proper subsets of T.
        proper = np.full(n, np.inf)
        for b in range(n):
            if t >> b & 1:
                np.minimum(proper, low[t ^ (1 << b)], out=proper)
        outside = [(t >> i) & 1 == 0 for i in range(n)]
        num = gains[t, outside]
        ratio = num / proper[outside]
        if ratio.size:
            best = max(best, float(np.max(ratio)))
    if skipped:
        log.info("exact_curvature skipped %d zero-gain denominators", skipped)
    return (best, skipped) if return_skipped else best


def expectation_alpha(c: float, epsilon: float, n: int, s_batch: int):
    """Return ``(alpha, beta)`` for the expectation guarantee.

    ``beta = 1 + max(0, s/(2n) - 1/(2(n - s)))`` and
    ``alpha = 1 - exp(-1/c) - epsilon**beta / c``. When the batch covers
    every node (s = n) beta is undefined and 1 is used instead.
    """
    if c < 1:
        raise ValueError("c must be at least 1")
    if s_batch >= n:
        warnings.warn("batch size equals n; using beta = 1", RuntimeWarning, stacklevel=2)
        beta = 1.0
    else:
        beta = 1.0 + max(0.0, s_batch / (2 * n) - 1.0 / (2 * (n - s_batch)))
    alpha = 1.0 - math.exp(-1.0 / c) - epsilon**beta / c
    return alpha, beta


def _run_trials(model, k, epsilon, trials, master_seed):
    traces = np.empty(trials)
    for t in range(trials):
        res = randomized_greedy(model, k, epsilon, derive_seed(master_seed, t))
        traces[t] = res.mse
    return traces


def _common(model, k, epsilon):
    n = model.n
    s_batch = min(batch_size(n, k, epsilon), n)
    cb = curvature_bound(model)
    c = max(1.0, cb)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        alpha, beta = expectation_alpha(c, epsilon, n, s_batch)
    opt = brute_force(model, k).mse
    return s_batch, cb, c, alpha, beta, opt, float(np.trace(model.p))


def check_expectation_bound(model: SignalModel, k: int, epsilon: float, trials: int,
                            master_seed, exact=None) -> BoundReport:
    """Compare the mean randomized-greedy MSE with ``alpha Tr(opt) +
    (1 - alpha) Tr(P)``.

    The curvature bound stands in for the true curvature; a larger c only
    raises the right-hand side. Passes when mean + 2 SE <= RHS.
    """
    s_batch, cb, c, alpha, beta, opt, tr_p = _common(model, k, epsilon)
    rhs = alpha * opt + (1 - alpha) * tr_p
    traces = _run_trials(model, k, epsilon, trials, master_seed)
    mean = float(traces.mean())
    se = float(traces.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return BoundReport(
        bound="expectation", alpha=alpha, c=c, beta=beta, epsilon=epsilon, k=k, n=model.n,
        s_batch=s_batch, curvature_bound=cb, exact_curvature=exact, trace_p=tr_p,
        trace_opt=opt, rhs=rhs, trials=trials, mean=mean, std_error=se,
        satisfied=bool(mean + 2 * se <= rhs), traces=traces.tolist(),
    )


def check_pac_bound(model: SignalModel, k: int, epsilon: float, trials: int, master_seed,
                    slack: float = 0.02, exact=None) -> BoundReport:
    """Fraction of trials violating ``Tr <= (1 - e^{-1/2c}) Tr(opt) +
    e^{-1/2c} Tr(P)``, compared with ``exp(-0.088 k) + slack``."""
    s_batch, cb, c, alpha, beta, opt, tr_p = _common(model, k, epsilon)
    q = math.exp(-1.0 / (2 * c))
    rhs = (1 - q) * opt + q * tr_p
    traces = _run_trials(model, k, epsilon, trials, master_seed)
    frac = float(np.mean(traces > rhs))
    allowed = math.exp(-PAC_CONSTANT * k)
    mean = float(traces.mean())
    se = float(traces.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return BoundReport(
        bound="pac", alpha=alpha, c=c, beta=beta, epsilon=epsilon, k=k, n=model.n,
        s_batch=s_batch, curvature_bound=cb, exact_curvature=exact, trace_p=tr_p,
        trace_opt=opt, rhs=rhs, trials=trials, mean=mean, std_error=se,
        satisfied=bool(frac <= allowed + slack), violation_fraction=frac,
        allowed_fraction=allowed, traces=traces.tolist(),
    )
