"""Convex relaxation of sampling-set selection and top-k rounding.

Binary selection indicators are relaxed to ``0 <= z <= 1`` with
``sum(z) <= k`` and the smooth convex objective

    F(z) = Tr((P^-1 + sigma^-2 sum_i z_i u_i u_i^T)^-1)

is minimised by projected gradient descent. The epigraph/LMI form of the
same problem (block matrix ``[[C, I], [I, Sigma_z^-1]] >= 0`` with objective
``Tr(C)``) is not solved directly; :func:`check_schur` certifies that a
relaxed solution together with ``C = Sigma_z`` is feasible for it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .signal import SignalModel

log = logging.getLogger(__name__)

BISECTION_TOL = 1e-10
ARMIJO = 1e-4
MAX_HALVINGS = 60
SCHUR_TOL = 1e-8


@dataclass
class RelaxedSolution:
    z: np.ndarray
    objective: float
    iterations: int
    converged: bool
    history: list = field(default_factory=list, repr=False)


def _precision(z, model):
    cp = sla.cho_factor(model.p, lower=True)
    prec = sla.cho_solve(cp, np.eye(model.k))
    prec = prec + (model.u.T * z) @ model.u / model.sigma2
    return 0.5 * (prec + prec.T)


def relaxed_covariance(z, model: SignalModel) -> np.ndarray:
    prec = _precision(np.asarray(z, dtype=float), model)
    sigma = sla.cho_solve(sla.cho_factor(prec, lower=True), np.eye(model.k))
    return 0.5 * (sigma + sigma.T)


def relaxed_objective_and_gradient(z, model: SignalModel):
    """Value ``Tr(Sigma_z)`` and gradient ``-sigma^-2 |Sigma_z u_i|^2``."""
    sigma = relaxed_covariance(z, model)
    w = model.u @ sigma
    grad = -np.einsum("ij,ij->i", w, w) / model.sigma2
    return float(np.trace(sigma)), grad


def project_box_capped_simplex(v, k) -> np.ndarray:
    """Euclidean projection onto ``{0 <= z <= 1, sum(z) <= k}``.

    If clipping to the box already satisfies the sum constraint that is the
    answer. Otherwise the projection is ``clip(v - tau, 0, 1)`` for the
    shift ``tau > 0`` making the sum equal ``k``; ``tau`` is bracketed by
    bisection and then solved exactly on the resulting free set.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    v = np.asarray(v, dtype=float)
    z = np.clip(v, 0.0, 1.0)
    if z.sum() <= k:
        return z

    lo, hi = 0.0, float(v.max())
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if np.clip(v - mid, 0.0, 1.0).sum() > k:
            lo = mid
        else:
            hi = mid
    tau = 0.5 * (lo + hi)
    shifted = v - tau
    free = (shifted > 0.0) & (shifted < 1.0)
    if free.any():
        ones = np.count_nonzero(shifted >= 1.0)
        exact = (v[free].sum() - (k - ones)) / np.count_nonzero(free)
        candidate = np.clip(v - exact, 0.0, 1.0)
        # Keep the closed-form shift only if it lands on the same free set.
        if abs(candidate.sum() - k) <= 1e-9 and abs(exact - tau) <= 1e-6:
            return candidate
    return np.clip(shifted, 0.0, 1.0)


def solve_relaxation(model: SignalModel, k: int, max_iters: int = 5000, tol: float = 1e-7,
                     z0=None) -> RelaxedSolution:
    """Projected gradient descent with Armijo backtracking.

    Starts from ``z = (k/n) 1`` unless ``z0`` is given. The first trial step
    is 1.0; later iterations start from twice the previously accepted step.
    Stops when an accepted step moves ``z`` by at most ``tol`` in the max
    norm, or after ``max_iters`` iterations (``converged=False``).
    """
    n = model.n
    if not 1 <= k <= n:
        raise ValueError(f"budget must lie in [1, {n}], got {k}")
    if z0 is None:
        z = np.full(n, k / n)
    else:
        z = project_box_capped_simplex(z0, k)
    f, g = relaxed_objective_and_gradient(z, model)
    history = [f]
    step = 1.0
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        for _ in range(MAX_HALVINGS):
            z_new = project_box_capped_simplex(z - step * g, k)
            d = z_new - z
            f_new, g_new = relaxed_objective_and_gradient(z_new, model)
            if f_new <= f + ARMIJO * (g @ d):
                break
            step *= 0.5
        else:
            # No acceptable step: z is stationary up to rounding.
            converged = bool(np.max(np.abs(d)) <= tol)
            break
        if f_new > f:
            raise AssertionError("objective increased along projected gradient")
        z, f, g = z_new, f_new, g_new
        history.append(f)
        if np.max(np.abs(d)) <= tol:
            converged = True
            break
        step *= 2.0
    if not converged:
        log.info("relaxation stopped after %d iterations without converging", it)
    return RelaxedSolution(z=z, objective=f, iterations=it, converged=converged, history=history)


def check_schur(z, c, model: SignalModel) -> bool:
    """True iff ``[[C, I], [I, Sigma_z^-1]]`` is PSD (to ``-1e-8``), i.e.
    ``C >= Sigma_z``."""
    k = model.k
    prec = _precision(np.asarray(z, dtype=float), model)
    eye = np.eye(k)
    block = np.block([[np.asarray(c, dtype=float), eye], [eye, prec]])
    block = 0.5 * (block + block.T)
    return bool(np.linalg.eigvalsh(block)[0] >= -SCHUR_TOL)


def round_top_k(z, k) -> tuple:
    """Indices of the ``k`` largest entries (ties to the lower index), in
    ascending order."""
    z = np.asarray(z, dtype=float)
    order = np.argsort(-z, kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))
