"""Decentralized connectivity maintenance for multi-robot teams, with
communication-failure and Gaussian-noise injection and resilience analysis."""

from .actuation import ActuationConfig, FilterState, integrate_step, lowpass_step
from .analysis import RunMetrics, SpectrumResult, compute_metrics, spectrum, sweep_summary
from .control import ControlParams, FormationSpec, ObstacleField
from .disturbance import DisturbanceConfig, corrupt_estimate, system_failure_rate
from .engine import (ObstacleParams, RunResult, ScenarioConfig, Trace,
                     TraceRecord, batch_run, run_scenario, run_with_reference)
from .estimator import EstimatorGains, EstimatorState, estimator_step, lambda2_local
from .graph import (CommGraph, RangeParams, SpectralResult, build_graph,
                    edge_weight, lambda2_gradient_exact, sigma_from_range,
                    spectral_oracle)

__version__ = "0.1.0"
