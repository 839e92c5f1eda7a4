"""Deterministic and stochastic simulation of delay equations."""

from .deterministic import (ContractionReport, DeterministicTrajectory, HistorySegment,
                            contraction_report, integrate_dde, weighted_norm)
from .stochastic import (LyapunovResult, MeanSquareResult, StabilityEstimate,
                         StochasticEnsemble, additive_noise, as_lyapunov_exponent,
                         mean_square_contraction, multiplicative_noise, simulate_sdde_pair,
                         stability_region, zero_drift)
