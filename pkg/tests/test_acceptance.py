"""Exit criteria. Each test appends one PASS/FAIL line that is printed in the
terminal summary."""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from gsampling.analysis import check_expectation_bound, check_pac_bound, curvature_bound
from gsampling.analysis import exact_curvature
from gsampling.estimator import (
    add_node,
    direct_covariance,
    init_state,
    marginal_gain,
    reconstruct_many,
)
from gsampling.experiments import load_config, read_records, run_experiment, summarize
from gsampling.relaxation import relaxed_objective_and_gradient, round_top_k, solve_relaxation
from gsampling.samplers import brute_force, greedy, randomized_greedy, run_method
from gsampling.signal import draw_signals

from conftest import ACCEPTANCE_LINES, make_model

FIG1_CONFIG = Path(__file__).parents[1] / "configs" / "fig1_top.json"


def verdict(number, title, ok, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {number:>2}. {title}: {detail}")
    assert ok, detail


def small_instances(k, count=20):
    return [make_model(10, k, 500 + i, p=0.2) for i in range(count)]


def test_01_recursion_fidelity():
    start = time.perf_counter()
    worst_trace = worst_gain = 0.0
    for i in range(100):
        model = make_model(100, 30, 1000 + i, p=0.2, method="lapack")
        order = np.random.default_rng(i).permutation(100)[:30]
        state = init_state(model)
        prev_direct = np.trace(model.p)
        for j in order:
            gain = marginal_gain(state, int(j), model)
            state = add_node(state, int(j), model)
            direct = np.trace(direct_covariance(state.s, model))
            worst_trace = max(worst_trace, abs(state.mse - direct) / direct)
            drop = prev_direct - direct
            worst_gain = max(worst_gain, abs(gain - drop) / drop)
            prev_direct = direct
    elapsed = time.perf_counter() - start
    ok = worst_trace <= 1e-8 and worst_gain <= 1e-8 and elapsed < 30
    verdict(1, "recursion fidelity", ok,
            f"max rel trace err {worst_trace:.2e}, max rel gain err {worst_gain:.2e}, "
            f"{elapsed:.1f}s")


def test_02_exact_greedy_equivalence():
    mismatches = 0
    for i in range(50):
        n = 20 + (i * 37) % 81
        k = 5 + i % 11
        model = make_model(n, k, 2000 + i, p=0.2)
        budget = min(k, 3 + i % 8)
        rg = randomized_greedy(model, budget, math.exp(-budget), seed=i)
        mismatches += rg.s != greedy(model, budget).s
    verdict(2, "randomized greedy at eps=exp(-k) equals greedy", mismatches == 0,
            f"{mismatches}/50 mismatches")


def test_03_expectation_bound():
    start = time.perf_counter()
    passed, slack = 0, math.inf
    for i, model in enumerate(small_instances(3)):
        rep = check_expectation_bound(model, 3, 0.1, 500, master_seed=i)
        passed += rep.satisfied
        slack = min(slack, rep.rhs - rep.mean - 2 * rep.std_error)
    elapsed = time.perf_counter() - start
    verdict(3, "expectation bound (n=10, k=3, eps=0.1)", passed == 20 and elapsed < 120,
            f"{passed}/20 instances, min slack {slack:.3g}, {elapsed:.1f}s")


def test_04_pac_bound():
    allowed = math.exp(-0.088 * 4) + 0.02
    worst = 0.0
    for i, model in enumerate(small_instances(4)):
        rep = check_pac_bound(model, 4, 0.1, 1000, master_seed=i, slack=0.02)
        worst = max(worst, rep.violation_fraction)
    verdict(4, "PAC bound (n=10, k=4, eps=0.1)", worst <= allowed,
            f"max violation fraction {worst:.3f} <= {allowed:.3f}")


def test_05_curvature_bound():
    violations, above_one = 0, 0
    for i in range(50):
        model = make_model(6 + i % 3, 3, 3000 + i, p=0.4)
        c = exact_curvature(model)
        violations += not (0 < c <= curvature_bound(model))
        above_one += c > 1
    verdict(5, "exact curvature <= curvature bound", violations == 0,
            f"{violations}/50 violations ({above_one} instances with curvature > 1)")


def test_06_relaxation_sandwich():
    bad, worst_fd = 0, 0.0
    h = 1e-5
    for i, model in enumerate(small_instances(3)):
        sol = solve_relaxation(model, 3)
        opt = brute_force(model, 3).mse
        rounded = float(np.trace(direct_covariance(round_top_k(sol.z, 3), model)))
        bad += not (sol.objective <= opt + 1e-9 and opt <= rounded + 1e-9)
        z = np.random.default_rng(i).uniform(0, 1, model.n)
        _, g = relaxed_objective_and_gradient(z, model)
        for j in range(model.n):
            e = np.zeros(model.n)
            e[j] = h
            fd = (relaxed_objective_and_gradient(z + e, model)[0]
                  - relaxed_objective_and_gradient(z - e, model)[0]) / (2 * h)
            worst_fd = max(worst_fd, abs(fd - g[j]))
    verdict(6, "relaxation sandwich and gradient check", bad == 0 and worst_fd <= 1e-5,
            f"{bad}/20 sandwich failures, max gradient error {worst_fd:.2e}")


@pytest.fixture(scope="module")
def fig1_run(tmp_path_factory):
    cfg = load_config(FIG1_CONFIG)
    cfg.timing = False
    out = tmp_path_factory.mktemp("fig1") / "run1.csv"
    start = time.perf_counter()
    run_experiment(cfg, output=str(out))
    return cfg, out, time.perf_counter() - start


def test_07_fig1_trend(fig1_run):
    _, out, elapsed = fig1_run
    rows = {(r["method"], r["budget"]): r for r in summarize(read_records(out))}
    failures = []
    for b in (10, 15, 20, 25, 30):
        g = rows["greedy", b]
        rg1 = rows["randomized_greedy(epsilon=0.1)", b]
        rg2 = rows["randomized_greedy(epsilon=0.01)", b]
        rel = rows["relaxation_rounded", b]
        uni = rows["uniform_random", b]
        mean, se = "mse_analytic_mean", "mse_analytic_se"
        if not g[mean] <= rg2[mean] + 2 * rg2[se]:
            failures.append(f"greedy vs rg(0.01) at {b}")
        if not rg1[mean] <= uni[mean] - 2 * uni[se]:
            failures.append(f"rg(0.1) vs uniform at {b}")
        if not rel[mean] <= uni[mean] - 2 * uni[se]:
            failures.append(f"relaxation vs uniform at {b}")
    ok = not failures and elapsed < 600
    verdict(7, "MSE-vs-budget ordering (ER n=100, k=30, 100 trials)", ok,
            f"{'; '.join(failures) or 'all orderings hold'}, {elapsed:.1f}s")


def test_08_speedup():
    n, k, eps = 1000, 200, 0.1
    model = make_model(n, k, 4000, p=0.2, method="lapack")
    rg = randomized_greedy(model, k, eps, seed=1)
    g = greedy(model, k)
    t_rg = min(_timed(lambda: randomized_greedy(model, k, eps, seed=s)) for s in range(5))
    t_g = min(_timed(lambda: greedy(model, k)) for _ in range(3))
    limit = 1.05 * math.ceil(n * math.log(1 / eps))
    speedup = t_g / t_rg
    ok = rg.gain_evaluations <= limit and g.gain_evaluations == sum(n - i for i in range(k)) \
        and speedup >= 5
    verdict(8, "randomized greedy speedup (n=1000, k=200, eps=0.1)", ok,
            f"evaluations {rg.gain_evaluations} vs {g.gain_evaluations} (limit {limit:.0f}), "
            f"wall-clock speedup {speedup:.1f}x")


def _timed(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def test_09_model_consistency():
    model = make_model(100, 30, 5000, p=0.2)
    trials = 10_000
    xs, _ = draw_signals(model, trials, 17)
    ys = xs + math.sqrt(model.sigma2) * np.random.default_rng(18).standard_normal(xs.shape)
    methods = [("greedy", {}), ("randomized_greedy", {"epsilon": 0.1}),
               ("randomized_greedy", {"epsilon": 0.01}), ("relaxation_rounded", {}),
               ("uniform_random", {}), ("leverage_score", {})]
    worst = 0.0
    for name, params in methods:
        res = run_method(name, model, 15, seed=9, **params)
        xhat, _ = reconstruct_many(ys, res.s, model)
        err = np.sum((xs - xhat) ** 2, axis=1)
        se = err.std(ddof=1) / math.sqrt(trials)
        worst = max(worst, abs(err.mean() - res.mse) / se)
    verdict(9, "empirical MSE matches analytic trace", worst <= 3,
            f"max deviation {worst:.2f} SE over {len(methods)} samplers")


def test_10_reproducibility(fig1_run, tmp_path):
    cfg, first, _ = fig1_run
    second = tmp_path / "run2.csv"
    run_experiment(cfg, output=str(second))
    same = first.read_bytes() == second.read_bytes()
    verdict(10, "byte-identical reruns", same, f"{first.stat().st_size} bytes, identical={same}")
