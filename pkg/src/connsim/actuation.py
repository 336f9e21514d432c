"""Actuator model: first-order low-pass filtering and single-integrator update.

Real robots track control commands only up to a bandwidth around 10 rad/s, so
the connectivity control signal is passed through H(s) = w / (s + w) with
w = 10 rad/s by default.  The discrete update is the exact zero-order-hold
form y <- e^(-w dt) y + (1 - e^(-w dt)) u, which is exact for the
piecewise-constant commands of a digital loop.  "Ideal" agents bypass the
filter entirely.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["ActuationConfig", "FilterState", "lowpass_step", "integrate_step"]


@dataclass(frozen=True)
class ActuationConfig:
    cutoff: float = 10.0       # rad/s
    ideal: bool = False        # bypass the filter entirely
    filter_total: bool = False  # filter u^c + u^d instead of u^c only

    def __post_init__(self):
        if not self.cutoff > 0:
            raise ValueError(f"filter cutoff must be positive, got {self.cutoff}")


@dataclass(frozen=True)
class FilterState:
    """Filtered-control memory, one m-vector per agent."""

    y: np.ndarray          # (N, m)
    cutoff: float = 10.0   # rad/s

    @staticmethod
    def at_rest(n_agents: int, dim: int, cutoff: float = 10.0) -> "FilterState":
        return FilterState(y=np.zeros((n_agents, dim)), cutoff=cutoff)


def lowpass_step(state: FilterState, u: np.ndarray, dt: float):
    """One exact ZOH step of the first-order low-pass; returns (state', output)."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    alpha = math.exp(-state.cutoff * dt)
    y = alpha * state.y + (1.0 - alpha) * np.asarray(u, dtype=float)
    return FilterState(y=y, cutoff=state.cutoff), y


def integrate_step(p: np.ndarray, u_filtered: np.ndarray, dt: float) -> np.ndarray:
    """Explicit Euler update of single-integrator agents: p + dt * u."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    return np.asarray(p, dtype=float) + dt * np.asarray(u_filtered, dtype=float)
