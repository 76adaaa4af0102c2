"""Bandits under unbounded stochastic corruption: divergence, policies and simulation."""

from .corrupted_kl import (
    CorruptedDensityPair,
    HuberPairSolution,
    KlGeometry,
    delta_min,
    huber_pair_densities,
    kl_eps_gauss,
    kl_eps_gauss_derivative,
    kl_mean_value_gap_bound,
    sample_huber_corruption,
    solve_c,
)
from .environments import BanditInstance, preset_instance
from .robust_stats import MedianAccumulator, median_bias, median_concentration_bound, n_min, s_eps
from .simulator import lower_bound_report, monte_carlo, run

__version__ = "0.1.0"
