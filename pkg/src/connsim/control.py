"""Connectivity-preserving and desired-behavior control laws.

The connectivity action scales the local connectivity gradient by
csch^2(lambda2_i - eps_bar): negligible while the graph is well connected and
diverging as the local estimate approaches the floor, which is what forces
link preservation.  Written with the modified edge weights

    abar_ij = gamma_i csch^2(lambda2_i - eps_bar) (nu_i - nu_j)^2 a_ij / sigma^2

the per-agent action is exactly row i of -Lbar p.  The desired behavior is
either consensus rendezvous (-L p) or formation keeping, which adds the bias
b_i = sum_j (1 + abar_ij(arg)) (pbar_i - pbar_j); when lambda2_i is not safely
above the floor the csch^2 argument is frozen at k_margin * eps_tilde so the
bias stays bounded.  A bounded repulsive potential field handles point
obstacles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .graph import CommGraph

__all__ = [
    "ControlParams",
    "FormationSpec",
    "ObstacleField",
    "csch2",
    "modified_edge_weight",
    "modified_weight_matrix",
    "connectivity_control",
    "connectivity_control_all",
    "rendezvous_control",
    "formation_control",
    "obstacle_avoidance",
    "obstacle_avoidance_all",
    "total_control",
    "saturate",
]


@dataclass(frozen=True)
class ControlParams:
    epsilon: float = 0.1        # connectivity floor, centralized law
    epsilon_bar: float = 0.1    # connectivity floor, decentralized law
    epsilon_tilde: float = 1.0  # formation-bias floor
    k_margin: float = 2.0       # bias branch margin (> 1)
    gamma: float = 50.0         # per-agent scaling of abar (uniform)
    u_c_max: float = 150.0      # per-agent saturation of ||u^c||
    csch_arg_min: float = 1e-3  # clamp of the csch^2 argument

    def __post_init__(self):
        if not (self.epsilon > 0 and self.epsilon_bar > 0 and self.epsilon_tilde > 0):
            raise ValueError("connectivity floors must be positive")
        if not self.k_margin > 1:
            raise ValueError(f"k_margin must exceed 1, got {self.k_margin}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not (self.u_c_max > 0 and self.csch_arg_min > 0):
            raise ValueError("u_c_max and csch_arg_min must be positive")


@dataclass(frozen=True)
class FormationSpec:
    """Desired relative positions pbar_i (defined up to a common translation)."""

    offsets: np.ndarray  # (N, m)

    @staticmethod
    def regular_polygon(n_agents: int, circumradius: float = 0.8) -> "FormationSpec":
        ang = 2.0 * np.pi * np.arange(n_agents) / n_agents
        return FormationSpec(offsets=circumradius
                             * np.stack([np.cos(ang), np.sin(ang)], axis=1))


@dataclass(frozen=True)
class ObstacleField:
    points: np.ndarray          # (K, m) point obstacles
    influence_radius: float = 0.4
    repulsion_gain: float = 0.01
    u_obst_max: float = 3.0

    def __post_init__(self):
        if not self.influence_radius > 0:
            raise ValueError("influence_radius must be positive")
        if not (self.repulsion_gain > 0 and self.u_obst_max > 0):
            raise ValueError("repulsion_gain and u_obst_max must be positive")


def csch2(x: float | np.ndarray, arg_min: float = 1e-3):
    """Squared hyperbolic cosecant with the argument clamped to >= arg_min.

    csch^2 diverges at 0+ and is undefined for x <= 0; the clamp keeps the
    gain huge-but-finite so integration survives connectivity-estimate dips
    (the estimates can go negative under failures).
    """
    # upper clamp keeps sinh from overflowing; csch^2(350) underflows to 0 anyway
    x = np.clip(x, arg_min, 350.0)
    return 1.0 / np.sinh(x) ** 2


def saturate(u: np.ndarray, max_norm: float) -> np.ndarray:
    """Scale rows of u down to max_norm where they exceed it."""
    u = np.asarray(u, dtype=float)
    norms = np.linalg.norm(u, axis=-1, keepdims=True)
    scale = np.ones_like(norms)
    np.divide(max_norm, norms, out=scale, where=norms > max_norm)
    return u * scale


def modified_edge_weight(lambda2_i: float, nu_i: float, nu_j: float,
                         a_ij: float, params: ControlParams,
                         sigma: float) -> float:
    """abar_ij = gamma csch^2(lambda2_i - eps_bar) (nu_i - nu_j)^2 a_ij / sigma^2."""
    gain = params.gamma * float(csch2(lambda2_i - params.epsilon_bar,
                                      params.csch_arg_min))
    return gain * (nu_i - nu_j) ** 2 * a_ij / sigma**2


def modified_weight_matrix(lambda2_i: np.ndarray, nu: np.ndarray,
                           received: np.ndarray, weights: np.ndarray,
                           params: ControlParams, sigma: float) -> np.ndarray:
    """Row i holds agent i's abar_ij, computed from its own lambda2_i and the
    values it received (not symmetric under disturbances)."""
    gain = params.gamma * csch2(lambda2_i - params.epsilon_bar,
                                params.csch_arg_min)
    return gain[:, None] * (nu[:, None] - received) ** 2 * weights / sigma**2


def connectivity_control(lambda2_i: float, local_gradient: np.ndarray,
                         params: ControlParams) -> np.ndarray:
    """u_i^c = gamma_i csch^2(lambda2_i - eps_bar) * grad_i, norm-saturated.

    Identical to row i of -Lbar p when grad_i is the local gradient the same
    received values produce.
    """
    gain = params.gamma * float(csch2(lambda2_i - params.epsilon_bar,
                                      params.csch_arg_min))
    return saturate(gain * np.asarray(local_gradient, dtype=float),
                    params.u_c_max)


def connectivity_control_all(lambda2_i: np.ndarray, local_gradients: np.ndarray,
                             params: ControlParams) -> np.ndarray:
    gain = params.gamma * csch2(lambda2_i - params.epsilon_bar,
                                params.csch_arg_min)
    return saturate(gain[:, None] * local_gradients, params.u_c_max)


def rendezvous_control(positions: np.ndarray, graph: CommGraph) -> np.ndarray:
    """Consensus rendezvous: u^d = -L p (drives all agents together)."""
    return -graph.laplacian @ np.asarray(positions, dtype=float)


def formation_control(positions: np.ndarray, lambda2_i: np.ndarray,
                      graph: CommGraph, spec: FormationSpec,
                      params: ControlParams, sigma: float,
                      nu: np.ndarray, received: np.ndarray) -> np.ndarray:
    """Formation keeping: u^d = -L p + b with the bounded bias term.

    b_i sums (1 + abar_ij(arg_i)) (pbar_i - pbar_j) over the neighborhood; the
    csch^2 argument arg_i is lambda2_i while lambda2_i > k_margin * eps_tilde
    and frozen at k_margin * eps_tilde otherwise, which keeps the bias finite
    no matter how far the estimate drops.
    """
    p = np.asarray(positions, dtype=float)
    l2i = np.asarray(lambda2_i, dtype=float)
    floor = params.k_margin * params.epsilon_tilde
    arg = np.where(l2i > floor, l2i, floor)
    abar = modified_weight_matrix(arg, nu, received, graph.weights, params, sigma)
    mask = graph.weights > 0.0
    offs_diff = spec.offsets[:, None, :] - spec.offsets[None, :, :]
    bias = np.einsum("ij,ijk->ik", (1.0 + abar) * mask, offs_diff)
    return -graph.laplacian @ p + bias


def obstacle_avoidance(p_i: np.ndarray, field: ObstacleField,
                       rng: np.random.Generator | None = None) -> np.ndarray:
    """Bounded repulsion from point obstacles within the influence radius.

    Each obstacle closer than rho contributes
    gain * (1/d - 1/rho) / d^2 along the unit vector away from it (zero at the
    boundary, so the field is continuous).  An agent exactly on an obstacle
    gets a max-magnitude push in a seeded-random direction.
    """
    p_i = np.asarray(p_i, dtype=float)
    u = np.zeros_like(p_i)
    rho = field.influence_radius
    for o in np.atleast_2d(field.points):
        d_vec = p_i - o
        d = float(np.linalg.norm(d_vec))
        if d >= rho:
            continue
        if d == 0.0:
            gen = rng if rng is not None else np.random.default_rng(0)
            direction = gen.standard_normal(p_i.shape[0])
            direction /= np.linalg.norm(direction)
            return field.u_obst_max * direction
        u += field.repulsion_gain * (1.0 / d - 1.0 / rho) / d**2 * (d_vec / d)
    return saturate(u, field.u_obst_max)


def obstacle_avoidance_all(positions: np.ndarray, field: ObstacleField,
                           rngs=None) -> np.ndarray:
    """Vectorized repulsion for all agents; rngs is the per-agent AgentStreams
    list, used only for the degenerate exactly-on-obstacle case."""
    p = np.asarray(positions, dtype=float)
    n = p.shape[0]
    obs = np.atleast_2d(field.points)
    if obs.shape[0] == 0:
        return np.zeros_like(p)
    rho = field.influence_radius
    d_vec = p[:, None, :] - obs[None, :, :]           # (N, K, m)
    d = np.linalg.norm(d_vec, axis=-1)                 # (N, K)
    on_obstacle = d == 0.0
    d_safe = np.where(d > 0.0, d, 1.0)
    mag = np.where((d < rho) & ~on_obstacle,
                   field.repulsion_gain * (1.0 / d_safe - 1.0 / rho) / d_safe**2,
                   0.0)
    u = np.einsum("ik,ikq->iq", mag / d_safe, d_vec)
    u = saturate(u, field.u_obst_max)
    for i in np.nonzero(on_obstacle.any(axis=1))[0]:
        gen = rngs[i].misc if rngs is not None else np.random.default_rng(0)
        direction = gen.standard_normal(p.shape[1])
        u[i] = field.u_obst_max * direction / np.linalg.norm(direction)
    return u


def total_control(u_c: np.ndarray, u_d: np.ndarray,
                  u_obst: np.ndarray) -> np.ndarray:
    """Total commanded velocity per agent (obstacle term folded into u^d)."""
    return np.asarray(u_c, float) + np.asarray(u_d, float) + np.asarray(u_obst, float)
