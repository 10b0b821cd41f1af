import numpy as np
import pytest

from gsampling.signal import (
    SignalModel,
    derive_seed,
    draw_signal,
    draw_signals,
    observe,
    random_psd_covariance,
)
from gsampling.spectral import eig_symmetric

from conftest import explicit_model, make_model


def test_covariance_scalar():
    p = random_psd_covariance(1, 42)
    assert p.shape == (1, 1) and p[0, 0] > 0


def test_covariance_positive_definite():
    w = eig_symmetric(random_psd_covariance(4, 1)).eigenvalues
    assert np.all(w > 0)


@pytest.mark.parametrize("seed", range(5))
def test_covariance_spectrum_bounds(seed):
    p = random_psd_covariance(30, seed)
    assert np.array_equal(p, p.T)
    w = np.linalg.eigvalsh(p)
    assert w.min() >= 1e-3 - 1e-12 and w.max() <= 1 + 1e-12


def test_covariance_reproducible():
    assert random_psd_covariance(6, 9).tobytes() == random_psd_covariance(6, 9).tobytes()


def test_model_rejects_bad_inputs():
    with pytest.raises(ValueError):
        explicit_model(np.eye(2), np.diag([1.0, 0.0]), 1.0)
    with pytest.raises(ValueError):
        explicit_model(np.eye(2), np.eye(2), 0.0)
    with pytest.raises(ValueError):
        explicit_model(np.eye(2), np.eye(3), 1.0)


def test_draws_identity_covariance():
    model = explicit_model(np.eye(3), np.eye(3), 1.0)
    _, xbar = draw_signals(model, 100_000, 5)
    assert np.abs(xbar.mean(axis=0)).max() < 0.02
    assert np.abs(np.cov(xbar.T) - np.eye(3)).max() <= 0.05


def test_draws_match_covariance():
    model = make_model(20, 5, 1)
    _, xbar = draw_signals(model, 100_000, 6)
    assert np.abs(np.cov(xbar.T) - model.p).max() <= 0.05 * np.abs(model.p).max()


def test_signal_in_band():
    model = make_model(20, 5, 1)
    x, xbar = draw_signal(model, 3)
    u = model.u
    assert np.linalg.norm(x - u @ (u.T @ x)) <= 1e-10 * np.linalg.norm(x)
    np.testing.assert_allclose(x, u @ xbar)


def test_draw_signal_matches_batch_shapes():
    model = make_model(20, 5, 1)
    xs, xbars = draw_signals(model, 4, 8)
    assert xs.shape == (4, 20) and xbars.shape == (4, 5)


def test_observe_noise_variance():
    model = make_model(20, 5, 1, sigma2=0.3)
    noise = np.concatenate([observe(model, np.zeros(20), s) for s in range(5000)])
    assert noise.size == 100_000
    assert abs(noise.var() - 0.3) <= 0.05 * 0.3


def test_observe_vanishing_noise():
    model = make_model(20, 5, 1, sigma2=1e-300)
    x, _ = draw_signal(model, 2)
    assert np.abs(observe(model, x, 4) - x).max() <= 1e-140


def test_observation_restriction():
    model = make_model(20, 5, 1)
    x, xbar = draw_signal(model, 2)
    y = observe(model, x, 4)
    s = [1, 5, 7]
    n_s = (y - x)[s]
    np.testing.assert_allclose(y[s], model.u[s] @ xbar + n_s, rtol=0, atol=1e-15)


def test_reproducible_streams():
    model = make_model(20, 5, 1)
    a = observe(model, draw_signal(model, 2)[0], 4)
    b = observe(model, draw_signal(model, 2)[0], 4)
    assert a.tobytes() == b.tobytes()


def test_derive_seed_independent_keys():
    seeds = {derive_seed(7, t, m) for t in range(10) for m in range(6)}
    assert len(seeds) == 60
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    assert all(0 <= s < 2**64 for s in seeds)
