"""Geometric communication graphs, Laplacians, and the centralized spectral oracle.

The communication topology of the robot team is recomputed from positions at
every step: agents i and j are linked iff ||p_i - p_j|| <= R, with a Gaussian
edge weight exp(-d^2 / (2 sigma^2)).  sigma is tied to the range R and the
weight threshold Delta at the boundary, so that the weight decays to exactly
Delta at distance R and drops to 0 beyond it.

The spectral oracle (full symmetric eigendecomposition via cyclic Jacobi
rotations) is ground truth only: it never feeds back into any agent's control
or estimation, it exists so the decentralized machinery can be validated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

__all__ = [
    "RangeParams",
    "CommGraph",
    "SpectralResult",
    "ExactGradient",
    "sigma_from_range",
    "edge_weight",
    "build_graph",
    "spectral_oracle",
    "lambda2_gradient_exact",
]

# Eigengap below which lambda2 is treated as repeated and the analytic
# gradient is unreliable (it assumes a simple eigenvalue).
DEGENERACY_GAP = 1e-9


def sigma_from_range(radius: float, delta: float) -> float:
    """Gaussian width such that the edge weight equals delta at distance R.

    Inverts exp(-R^2 / (2 sigma^2)) = delta.
    """
    if not radius > 0:
        raise ValueError(f"communication range must be positive, got {radius}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"weight threshold delta must lie in (0, 1), got {delta}")
    return radius / math.sqrt(-2.0 * math.log(delta))


@dataclass(frozen=True)
class RangeParams:
    """Communication range R and boundary weight threshold delta (sigma derived)."""

    radius: float = 4.0
    delta: float = 0.01

    def __post_init__(self):
        sigma_from_range(self.radius, self.delta)  # validates

    @property
    def sigma(self) -> float:
        return sigma_from_range(self.radius, self.delta)


@dataclass(frozen=True)
class CommGraph:
    """Weighted communication graph snapshot: adjacency, degrees, Laplacian."""

    weights: np.ndarray   # (N, N), symmetric, zero diagonal, entries in [0, 1]
    degrees: np.ndarray   # (N,)
    laplacian: np.ndarray  # (N, N) = diag(degrees) - weights

    @property
    def n_agents(self) -> int:
        return self.weights.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        return np.nonzero(self.weights[i] > 0.0)[0]


@dataclass(frozen=True)
class SpectralResult:
    lambda2: float
    fiedler: np.ndarray          # (N,) unit eigenvector for lambda2
    all_eigenvalues: np.ndarray  # (N,) ascending, lambda_1 = 0 within tolerance

    @property
    def eigengap(self) -> float:
        """lambda3 - lambda2 (inf for N < 3)."""
        w = self.all_eigenvalues
        return float(w[2] - w[1]) if w.size >= 3 else math.inf


@dataclass(frozen=True)
class ExactGradient:
    """Per-agent gradient of lambda2 w.r.t. positions; degenerate marks a
    repeated lambda2 for which the analytic formula is unreliable."""

    grads: np.ndarray  # (N, m)
    degenerate: bool


def edge_weight(p_i: np.ndarray, p_j: np.ndarray, params: RangeParams) -> float:
    """Gaussian weight within range R, exactly 0 beyond (jump of size delta at R)."""
    p_i = np.asarray(p_i, dtype=float)
    p_j = np.asarray(p_j, dtype=float)
    if p_i.shape != p_j.shape:
        raise ValueError(f"position dimension mismatch: {p_i.shape} vs {p_j.shape}")
    d2 = float(np.sum((p_i - p_j) ** 2))
    if d2 > params.radius * params.radius:
        return 0.0
    return math.exp(-d2 / (2.0 * params.sigma**2))


def build_graph(positions: np.ndarray, params: RangeParams) -> CommGraph:
    """Build the weighted graph from scratch for the given positions (N, m)."""
    p = np.asarray(positions, dtype=float)
    if p.ndim != 2 or p.shape[0] < 1:
        raise ValueError(f"positions must be (N, m) with N >= 1, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("positions must be finite")
    diff = p[:, None, :] - p[None, :, :]
    d2 = np.sum(diff * diff, axis=-1)
    w = np.exp(-d2 / (2.0 * params.sigma**2))
    w[d2 > params.radius * params.radius] = 0.0
    np.fill_diagonal(w, 0.0)
    deg = w.sum(axis=1)
    lap = np.diag(deg) - w
    return CommGraph(weights=w, degrees=deg, laplacian=lap)


@njit(cache=True)
def _jacobi_eigh(a: np.ndarray, tol: float, max_sweeps: int):
    """Cyclic Jacobi eigendecomposition of a symmetric matrix (in place).

    Returns (eigenvalues, eigenvector columns, sweeps, converged).  Suited to
    the small dense Laplacians here (N <= ~64).
    """
    n = a.shape[0]
    v = np.eye(n)
    sweeps = 0
    converged = False
    for sweep in range(max_sweeps):
        sweeps = sweep + 1
        off = 0.0
        for i in range(n - 1):
            for j in range(i + 1, n):
                off += a[i, j] * a[i, j]
        if math.sqrt(2.0 * off) <= tol:
            converged = True
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                if tau >= 0.0:
                    t = 1.0 / (tau + math.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                for k in range(n):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(n):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(n):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
    w = np.empty(n)
    for i in range(n):
        w[i] = a[i, i]
    return w, v, sweeps, converged


def spectral_oracle(graph: CommGraph, tol: float = 1e-12,
                    max_sweeps: int = 100) -> SpectralResult:
    """Full eigendecomposition of the Laplacian; lambda2 and a unit Fiedler vector.

    Sign convention: first component of the Fiedler vector larger than 1e-12
    in magnitude is made positive, so results are deterministic.
    """
    n = graph.n_agents
    if n == 1:
        return SpectralResult(lambda2=0.0, fiedler=np.ones(1),
                              all_eigenvalues=np.zeros(1))
    w, v, sweeps, converged = _jacobi_eigh(
        graph.laplacian.copy(), tol, max_sweeps)
    if not converged:
        raise ArithmeticError(
            f"Jacobi eigensolver did not converge after {sweeps} sweeps")
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    fiedler = v[:, 1].copy()
    for x in fiedler:
        if abs(x) > 1e-12:
            if x < 0.0:
                fiedler = -fiedler
            break
    return SpectralResult(lambda2=float(w[1]), fiedler=fiedler,
                          all_eigenvalues=w)


def lambda2_gradient_exact(positions: np.ndarray, graph: CommGraph,
                           fiedler: np.ndarray, sigma: float,
                           eigengap: float = math.inf) -> ExactGradient:
    """Per-agent gradient of lambda2: sum_j -a_ij (v_i - v_j)^2 (p_i - p_j) / sigma^2.

    Valid for a simple lambda2; a gap below DEGENERACY_GAP flags the result as
    degenerate (still returned).
    """
    p = np.asarray(positions, dtype=float)
    v = np.asarray(fiedler, dtype=float)
    dv2 = (v[:, None] - v[None, :]) ** 2
    coef = -graph.weights * dv2 / sigma**2          # (N, N)
    diff = p[:, None, :] - p[None, :, :]            # (N, N, m)
    grads = np.einsum("ij,ijk->ik", coef, diff)
    return ExactGradient(grads=grads, degenerate=bool(eigengap < DEGENERACY_GAP))
