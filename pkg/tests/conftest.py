from pathlib import Path

import numpy as np
import pytest

from gsampling.graph import generate_erdos_renyi
from gsampling.signal import SignalModel, random_psd_covariance
from gsampling.spectral import BandlimitedBasis, graph_basis

DATA = Path(__file__).parent / "data"

ACCEPTANCE_LINES = []


def make_model(n, k, seed, sigma2=1e-2, p=0.3, method="auto"):
    """ER graph, adjacency bandlimited basis and a random prior."""
    g = generate_erdos_renyi(n, p, seed)
    basis = graph_basis(g, k, "adjacency", method=method)
    return SignalModel(basis, random_psd_covariance(k, seed + 10_000), sigma2)


def explicit_model(u, p, sigma2):
    u = np.asarray(u, dtype=float)
    return SignalModel(BandlimitedBasis(u=u, support=tuple(range(u.shape[1]))), p, sigma2)


@pytest.fixture
def diag_model():
    """n = k = 2, U = I, P = diag(2, 1), unit noise: small enough to do by hand."""
    return explicit_model(np.eye(2), np.diag([2.0, 1.0]), 1.0)


@pytest.fixture
def er_model():
    return make_model(40, 8, seed=3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
