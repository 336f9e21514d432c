"""Decentralized Fiedler-eigenvector and connectivity estimation.

Each agent i carries an estimate nu_i of its own component of the Fiedler
eigenvector plus two PI average-consensus trackers: avg1 follows the network
average of {nu_j} (deflation of the all-ones eigenvector) and avg2 follows the
average of {nu_j^2} (normalization).  The eigenvector dynamics are

    d nu_i/dt = -k1 avg1_z_i - k2 sum_j a_ij (nu_i - nu_j') - k3 (avg2_z_i - 1) nu_i

where nu_j' is the (possibly corrupted) value received from neighbor j, and
each PI tracker runs

    dz_i/dt = gamma (input_i - z_i) - Kp sum_j a_ij (z_i - z_j)
              + Ki sum_j a_ij (w_i - w_j)
    dw_i/dt = -Ki sum_j a_ij (z_i - z_j)

with input nu_i (avg1) or nu_i^2 (avg2).  At equilibrium on a static graph the
nu vector aligns with the Fiedler direction scaled so that

    lambda2 ~ (k3 / k2) * (1 - Ave(nu^2)),

which is exactly the local connectivity readout lambda2_i each agent computes
from its own avg2 state.  Everything here consumes only neighbor-supplied
values: no global quantity is ever read.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "EstimatorGains",
    "EstimatorState",
    "NetworkEstimatorState",
    "estimator_step",
    "step_all",
    "lambda2_local",
    "lambda2_local_all",
    "lambda2_gradient_local",
    "lambda2_gradient_local_all",
    "init_network_state",
]


@dataclass(frozen=True)
class EstimatorGains:
    k1: float = 50.0      # deflation (average removal)
    k2: float = 10.0      # Laplacian coupling
    k3: float = 200.0     # normalization; lambda2_i = (k3/k2)(1 - avg2_z)
    gamma_pi: float = 100.0  # PI tracking rate
    kp_pi: float = 150.0     # PI proportional consensus gain
    ki_pi: float = 120.0     # PI integral consensus gain

    def __post_init__(self):
        for name in ("k1", "k2", "k3", "gamma_pi", "kp_pi", "ki_pi"):
            if not getattr(self, name) > 0:
                raise ValueError(f"estimator gain {name} must be positive, "
                                 f"got {getattr(self, name)}")


@dataclass(frozen=True)
class EstimatorState:
    """One agent's estimator memory."""

    nu: float        # eigenvector-component estimate
    avg1_z: float    # PI estimate of Ave({nu_j})
    avg1_w: float    # its integral state
    avg2_z: float    # PI estimate of Ave({nu_j^2})
    avg2_w: float    # its integral state

    @staticmethod
    def fresh(nu: float) -> "EstimatorState":
        """PI states start at the local instantaneous values."""
        return EstimatorState(nu=nu, avg1_z=nu, avg1_w=0.0,
                              avg2_z=nu * nu, avg2_w=0.0)


@dataclass
class NetworkEstimatorState:
    """All agents' estimator memory as column arrays (index = agent)."""

    nu: np.ndarray
    avg1_z: np.ndarray
    avg1_w: np.ndarray
    avg2_z: np.ndarray
    avg2_w: np.ndarray

    def agent(self, i: int) -> EstimatorState:
        return EstimatorState(nu=float(self.nu[i]),
                              avg1_z=float(self.avg1_z[i]),
                              avg1_w=float(self.avg1_w[i]),
                              avg2_z=float(self.avg2_z[i]),
                              avg2_w=float(self.avg2_w[i]))


def init_network_state(nu0: np.ndarray) -> NetworkEstimatorState:
    nu0 = np.asarray(nu0, dtype=float)
    return NetworkEstimatorState(nu=nu0.copy(), avg1_z=nu0.copy(),
                                 avg1_w=np.zeros_like(nu0),
                                 avg2_z=nu0**2, avg2_w=np.zeros_like(nu0))


def _check_finite(values, what: str):
    arr = np.asarray(values, dtype=float)
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"non-finite {what} passed to estimator")


def estimator_step(state_i: EstimatorState, neighbor_nus, neighbor_pi_states,
                   weights, gains: EstimatorGains, dt: float) -> EstimatorState:
    """One explicit-Euler update of agent i from neighbor data only.

    neighbor_nus are the received (possibly corrupted) eigenvector estimates;
    neighbor_pi_states is the index-aligned list of neighbor
    (avg1_z, avg1_w, avg2_z, avg2_w) tuples; weights are the a_ij.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    _check_finite(neighbor_nus, "neighbor estimates")
    a = np.asarray(weights, dtype=float)
    nus = np.asarray(neighbor_nus, dtype=float)
    if a.shape != nus.shape:
        raise ValueError("neighbor lists must be index-aligned")
    pi = np.asarray(neighbor_pi_states, dtype=float).reshape(-1, 4)
    if pi.shape[0] != a.shape[0]:
        raise ValueError("neighbor lists must be index-aligned")
    _check_finite(pi, "neighbor PI states")

    g = gains
    coup = float(np.sum(a * (state_i.nu - nus)))
    dnu = (-g.k1 * state_i.avg1_z - g.k2 * coup
           - g.k3 * (state_i.avg2_z - 1.0) * state_i.nu)

    def pi_step(z, w, inp, z_nbrs, w_nbrs):
        dz_cons = float(np.sum(a * (z - z_nbrs)))
        dw_cons = float(np.sum(a * (w - w_nbrs)))
        dz = g.gamma_pi * (inp - z) - g.kp_pi * dz_cons + g.ki_pi * dw_cons
        dw = -g.ki_pi * dz_cons
        return z + dt * dz, w + dt * dw

    z1, w1 = pi_step(state_i.avg1_z, state_i.avg1_w, state_i.nu,
                     pi[:, 0], pi[:, 1])
    z2, w2 = pi_step(state_i.avg2_z, state_i.avg2_w, state_i.nu**2,
                     pi[:, 2], pi[:, 3])
    return EstimatorState(nu=state_i.nu + dt * dnu,
                          avg1_z=z1, avg1_w=w1, avg2_z=z2, avg2_w=w2)


def step_all(state: NetworkEstimatorState, received: np.ndarray,
             weights: np.ndarray, gains: EstimatorGains,
             dt: float) -> NetworkEstimatorState:
    """Synchronous-round update of all agents at once.

    received[i, j] is agent j's estimate as seen by receiver i (corruption is
    per link); PI consensus states are exchanged uncorrupted.  Equivalent to
    looping estimator_step over agents with a snapshot of the previous round.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    _check_finite(received, "received estimates")
    g = gains
    w = weights
    deg = w.sum(axis=1)

    coup = np.sum(w * (state.nu[:, None] - received), axis=1)
    dnu = -g.k1 * state.avg1_z - g.k2 * coup - g.k3 * (state.avg2_z - 1.0) * state.nu

    def pi_step(z, wint, inp):
        lz = deg * z - w @ z
        lw = deg * wint - w @ wint
        dz = g.gamma_pi * (inp - z) - g.kp_pi * lz + g.ki_pi * lw
        dw = -g.ki_pi * lz
        return z + dt * dz, wint + dt * dw

    z1, w1 = pi_step(state.avg1_z, state.avg1_w, state.nu)
    z2, w2 = pi_step(state.avg2_z, state.avg2_w, state.nu**2)
    return NetworkEstimatorState(nu=state.nu + dt * dnu,
                                 avg1_z=z1, avg1_w=w1, avg2_z=z2, avg2_w=w2)


def lambda2_local(state_i: EstimatorState, gains: EstimatorGains) -> float:
    """Agent i's connectivity readout: (k3/k2) * (1 - avg2_z)."""
    return gains.k3 / gains.k2 * (1.0 - state_i.avg2_z)


def lambda2_local_all(state: NetworkEstimatorState,
                      gains: EstimatorGains) -> np.ndarray:
    return gains.k3 / gains.k2 * (1.0 - state.avg2_z)


def lambda2_gradient_local(nu_i: float, neighbor_nus, p_i, neighbor_positions,
                           weights, sigma: float) -> np.ndarray:
    """Agent i's local gradient: sum_j -a_ij (nu_i - nu_j)^2 (p_i - p_j) / sigma^2."""
    p_i = np.asarray(p_i, dtype=float)
    if len(neighbor_nus) == 0:
        return np.zeros_like(p_i)
    nus = np.asarray(neighbor_nus, dtype=float)
    a = np.asarray(weights, dtype=float)
    p_nbrs = np.asarray(neighbor_positions, dtype=float)
    coef = -a * (nu_i - nus) ** 2 / sigma**2
    return coef @ (p_i - p_nbrs)


def lambda2_gradient_local_all(nu: np.ndarray, received: np.ndarray,
                               positions: np.ndarray, weights: np.ndarray,
                               sigma: float) -> np.ndarray:
    """All agents' local gradients, each from its own received values."""
    coef = -weights * (nu[:, None] - received) ** 2 / sigma**2
    diff = positions[:, None, :] - positions[None, :, :]
    return np.einsum("ij,ijk->ik", coef, diff)
