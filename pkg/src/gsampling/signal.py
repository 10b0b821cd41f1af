"""Bayesian bandlimited signal model: random covariances, signal draws and
noisy observations.

All randomness goes through ``numpy.random.Generator`` on the counter-based
Philox bit generator; Gaussian variates come from numpy's ziggurat sampler.
A given integer seed therefore reproduces the same stream on every platform
numpy supports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import BandlimitedBasis

MIN_COV_EIG = 1e-3


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(int(seed)))


def derive_seed(master_seed, *keys) -> int:
    """Mix a master seed with integer keys into an independent 64-bit seed.

    Uses numpy's ``SeedSequence`` hashing, so adding a key never shifts the
    streams obtained from other keys.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True, eq=False)
class SignalModel:
    """Prior covariance ``p`` of the k in-band coefficients, per-node white
    noise variance ``sigma2`` and the bandlimited basis."""

    basis: BandlimitedBasis
    p: np.ndarray
    sigma2: float

    def __post_init__(self):
        p = np.array(self.p, dtype=float, copy=True)
        k = self.basis.k
        if p.shape != (k, k):
            raise ValueError(f"covariance must be {k}x{k}, got {p.shape}")
        if np.max(np.abs(p - p.T)) > 1e-10:
            raise ValueError("covariance must be symmetric")
        p = 0.5 * (p + p.T)
        try:
            np.linalg.cholesky(p)
        except np.linalg.LinAlgError:
            raise ValueError("covariance must be positive definite") from None
        if not self.sigma2 > 0:
            raise ValueError(f"noise variance must be positive, got {self.sigma2}")
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def u(self) -> np.ndarray:
        return self.basis.u

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def k(self) -> int:
        return self.basis.k


def random_psd_covariance(k: int, seed) -> np.ndarray:
    """Random well-conditioned covariance ``Q^T D Q``.

    Q is a Haar-distributed orthogonal matrix (QR of a Gaussian matrix with
    the sign of R's diagonal folded in) and D has i.i.d. entries uniform on
    [1e-3, 1].
    """
    if k < 1:
        raise ValueError("k must be positive")
    rng = make_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    q = q * np.where(np.diag(r) < 0, -1.0, 1.0)
    d = rng.uniform(MIN_COV_EIG, 1.0, size=k)
    p = (q.T * d) @ q
    return 0.5 * (p + p.T)


def draw_signal(model: SignalModel, seed):
    """Draw in-band coefficients ``xbar ~ N(0, P)`` and the graph signal
    ``x = U xbar``."""
    rng = make_rng(seed)
    chol = np.linalg.cholesky(model.p)
    xbar = chol @ rng.standard_normal(model.k)
    return model.u @ xbar, xbar


def draw_signals(model: SignalModel, count: int, seed):
    """Vectorised :func:`draw_signal`: returns arrays of shape (count, n) and
    (count, k)."""
    rng = make_rng(seed)
    chol = np.linalg.cholesky(model.p)
    xbar = rng.standard_normal((count, model.k)) @ chol.T
    return xbar @ model.u.T, xbar


def observe(model: SignalModel, x, seed) -> np.ndarray:
    """Noisy observation ``y = x + n`` with ``n ~ N(0, sigma2 I)``."""
    x = np.asarray(x, dtype=float)
    rng = make_rng(seed)
    return x + np.sqrt(model.sigma2) * rng.standard_normal(x.shape)
