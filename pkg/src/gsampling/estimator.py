"""LMS reconstruction and error-covariance bookkeeping.

For a sampling set S the in-band error covariance is

    Sigma_S = (P^-1 + sigma^-2 U_S^T U_S)^-1

and the MSE of the reconstruction is its trace. Greedy-type samplers never
form this inverse: they start from ``Sigma_{} = P`` and apply the
Sherman-Morrison downdate one node at a time (:func:`add_node`), with the
marginal trace reduction given in closed form by :func:`marginal_gain`.
:func:`direct_covariance` is the non-recursive path used as a reference.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .signal import SignalModel

MAX_CONDITION = 1e14


class AlreadySelectedError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CovarianceState:
    """Selected nodes (in insertion order), their error covariance and the
    achieved trace reduction ``f(S) = Tr(P) - Tr(sigma_bar)``."""

    s: tuple
    sigma_bar: np.ndarray
    f_value: float

    @property
    def mse(self) -> float:
        return float(np.trace(self.sigma_bar))


def init_state(model: SignalModel) -> CovarianceState:
    sigma = np.array(model.p, copy=True)
    sigma.setflags(write=False)
    return CovarianceState(s=(), sigma_bar=sigma, f_value=0.0)


def marginal_gains(state: CovarianceState, nodes, model: SignalModel) -> np.ndarray:
    """Trace reduction from adding each node in ``nodes`` to ``state``.

    Row-wise evaluation of ``|Sigma u_j|^2 / (sigma2 + u_j^T Sigma u_j)``;
    the covariance is only read, so batches can be evaluated in any order.
    """
    nodes = np.asarray(nodes, dtype=np.intp)
    rows = model.u[nodes]
    w = rows @ state.sigma_bar
    num = np.einsum("ij,ij->i", w, w)
    den = model.sigma2 + np.einsum("ij,ij->i", w, rows)
    return num / den


def marginal_gain(state: CovarianceState, j: int, model: SignalModel) -> float:
    if j in state.s:
        raise AlreadySelectedError(f"node {j} is already selected")
    if not 0 <= j < model.n:
        raise IndexError(f"node {j} out of range")
    return float(marginal_gains(state, [j], model)[0])


def add_node(state: CovarianceState, j: int, model: SignalModel) -> CovarianceState:
    """Return the state for ``S + {j}`` via the rank-one downdate."""
    if j in state.s:
        raise AlreadySelectedError(f"node {j} is already selected")
    if not 0 <= j < model.n:
        raise IndexError(f"node {j} out of range")
    sigma = state.sigma_bar
    w = sigma @ model.u[j]
    den = model.sigma2 + w @ model.u[j]
    gain = (w @ w) / den
    # w_i*w_j == w_j*w_i in IEEE arithmetic, so an exactly symmetric input
    # stays exactly symmetric; no re-symmetrization pass is needed.
    downdate = np.multiply.outer(w, w)
    downdate /= den
    new = sigma - downdate
    new.setflags(write=False)
    return CovarianceState(s=state.s + (int(j),), sigma_bar=new, f_value=state.f_value + gain)


def state_for(s, model: SignalModel) -> CovarianceState:
    """Chain :func:`add_node` over ``s`` starting from the prior."""
    state = init_state(model)
    for j in s:
        state = add_node(state, int(j), model)
    return state


def _precision(s, model):
    cp = sla.cho_factor(model.p, lower=True)
    prec = sla.cho_solve(cp, np.eye(model.k))
    s = list(s)
    if s:
        us = model.u[s]
        prec = prec + (us.T @ us) / model.sigma2
    return 0.5 * (prec + prec.T)


def direct_covariance(s, model: SignalModel) -> np.ndarray:
    """``(P^-1 + sigma^-2 U_S^T U_S)^-1`` by Cholesky solves."""
    s = list(s)
    if not s:
        return np.array(model.p, copy=True)
    prec = _precision(s, model)
    cond = np.linalg.cond(prec)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise np.linalg.LinAlgError(f"precision matrix too ill-conditioned (cond={cond:.3g})")
    sigma = sla.cho_solve(sla.cho_factor(prec, lower=True), np.eye(model.k))
    return 0.5 * (sigma + sigma.T)


def mse(s, model: SignalModel) -> float:
    """Trace of the error covariance for sampling set ``s``; the empty set
    gives ``Tr(P)``."""
    return float(np.trace(direct_covariance(s, model)))


def nodal_mse(s, model: SignalModel) -> float:
    """Trace of the node-domain error covariance ``U Sigma_S U^T``."""
    sigma = direct_covariance(s, model)
    return float(np.trace(model.u @ sigma @ model.u.T))


def reconstruct(y, s, model: SignalModel):
    """LMS estimate from the samples ``y[s]``.

    Returns ``(xhat, xbar_hat)`` with ``xbar_hat = sigma^-2 Sigma_S U_S^T y_S``
    and ``xhat = U xbar_hat``. The in-band estimate is obtained from the
    equivalent system ``(sigma2 P^-1 + U_S^T U_S) xbar = U_S^T y_S``, which
    stays well scaled as the noise variance goes to zero.
    """
    s = list(s)
    if not s:
        raise ValueError("sampling set is empty")
    y = np.asarray(y, dtype=float)
    us = model.u[s]
    cp = sla.cho_factor(model.p, lower=True)
    a = model.sigma2 * sla.cho_solve(cp, np.eye(model.k)) + us.T @ us
    a = 0.5 * (a + a.T)
    xbar_hat = sla.solve(a, us.T @ y[s], assume_a="pos")
    return model.u @ xbar_hat, xbar_hat


def reconstruct_many(ys, s, model: SignalModel):
    """Vectorised :func:`reconstruct` for a stack of observations (rows)."""
    s = list(s)
    if not s:
        raise ValueError("sampling set is empty")
    ys = np.atleast_2d(np.asarray(ys, dtype=float))
    us = model.u[s]
    cp = sla.cho_factor(model.p, lower=True)
    a = model.sigma2 * sla.cho_solve(cp, np.eye(model.k)) + us.T @ us
    a = 0.5 * (a + a.T)
    xbar_hat = sla.solve(a, us.T @ ys[:, s].T, assume_a="pos").T
    return xbar_hat @ model.u.T, xbar_hat
