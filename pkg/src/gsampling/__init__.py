"""Sampling-set selection and Bayesian reconstruction of bandlimited graph
signals."""

__version__ = "0.1.0"

from .estimator import (  # noqa: E402
    CovarianceState,
    add_node,
    direct_covariance,
    init_state,
    marginal_gain,
    marginal_gains,
    mse,
    reconstruct,
)
from .graph import Graph, generate_erdos_renyi, laplacian, load_matrix_market  # noqa: E402
from .relaxation import (  # noqa: E402
    RelaxedSolution,
    check_schur,
    project_box_capped_simplex,
    relaxed_objective_and_gradient,
    round_top_k,
    solve_relaxation,
)
from .samplers import (  # noqa: E402
    SamplingResult,
    brute_force,
    greedy,
    leverage_score,
    randomized_greedy,
    relaxation_rounded,
    uniform_random,
)
from .signal import SignalModel, draw_signal, observe, random_psd_covariance  # noqa: E402
from .spectral import BandlimitedBasis, SpectralBasis, bandlimit, eig_symmetric  # noqa: E402
