"""Scenario orchestration: deterministic synchronous simulation rounds.

One step, in order: rebuild the communication graph from current positions;
corrupt the estimates each agent receives; advance every agent's estimator;
read off the local connectivity estimates and gradients; compute the
connectivity, desired-behavior, and obstacle controls; low-pass the
connectivity control; Euler-integrate; record the trace.  The centralized
spectral oracle runs alongside purely for the trace, it never reaches any
agent.

Determinism: all randomness comes from numpy SeedSequence children of the run
seed (initial placement and per-agent disturbance streams), so identical
(config, seed) pairs give bit-identical results.
"""

from __future__ import annotations

import dataclasses
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import actuation, control, disturbance, estimator, graph

__all__ = [
    "ObstacleParams",
    "ScenarioConfig",
    "Trace",
    "TraceRecord",
    "RunResult",
    "run_scenario",
    "run_with_reference",
    "batch_run",
]

log = logging.getLogger(__name__)


class ScenarioError(ValueError):
    """Invalid scenario configuration (e.g. no connected initial placement)."""


@dataclass(frozen=True)
class ObstacleParams:
    count: int = 150
    band: tuple = (-1.0, 1.0)   # x-interval of the obstacle band (full y extent)
    influence_radius: float = 0.4
    repulsion_gain: float = 0.01
    u_obst_max: float = 3.0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError(f"obstacle count must be >= 0, got {self.count}")
        if not self.band[0] <= self.band[1]:
            raise ValueError(f"obstacle band must be ordered, got {self.band}")


@dataclass(frozen=True)
class ScenarioConfig:
    n_agents: int = 5
    dim: int = 2
    mode: str = "formation"              # "rendezvous" | "formation"
    formation_radius: float = 0.8        # regular N-gon circumradius
    world_bounds: tuple = ((-1.0, -1.0), (1.0, 1.0))
    obstacles: ObstacleParams = field(default_factory=ObstacleParams)
    range_params: graph.RangeParams = field(default_factory=graph.RangeParams)
    gains: estimator.EstimatorGains = field(default_factory=estimator.EstimatorGains)
    control: control.ControlParams = field(default_factory=control.ControlParams)
    disturbance: disturbance.DisturbanceConfig = field(
        default_factory=disturbance.DisturbanceConfig)
    actuation: actuation.ActuationConfig = field(
        default_factory=actuation.ActuationConfig)
    dt: float = 1e-3
    t_final: float = 5.0
    t_settle: float = 0.5   # estimator boot window: agents hold still until then
    seed: int = 0
    max_init_retries: int = 100
    loss_tol: float = 1e-6               # connected iff oracle lambda2 > loss_tol

    def __post_init__(self):
        if self.n_agents < 2:
            raise ValueError(f"need at least 2 agents, got {self.n_agents}")
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if self.mode not in ("rendezvous", "formation"):
            raise ValueError(f"mode must be 'rendezvous' or 'formation', "
                             f"got {self.mode!r}")
        if not (self.dt > 0 and self.t_final > 0):
            raise ValueError("dt and t_final must be positive")
        if self.t_settle < 0:
            raise ValueError(f"t_settle must be >= 0, got {self.t_settle}")
        lo, hi = np.asarray(self.world_bounds[0]), np.asarray(self.world_bounds[1])
        if lo.shape != (self.dim,) and lo.size != self.dim:
            raise ValueError("world_bounds must match dim")
        if not np.all(np.asarray(hi) > np.asarray(lo)):
            raise ValueError("world_bounds must be a nonempty box")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def formation_spec(self) -> control.FormationSpec:
        return control.FormationSpec.regular_polygon(
            self.n_agents, self.formation_radius)


@dataclass
class Trace:
    """Column-array trace: index = step, one record per dt."""

    t: np.ndarray               # (n,)
    lambda2_true: np.ndarray    # (n,) oracle
    lambda2_est: np.ndarray     # (n, N) per-agent lambda2_i
    nu: np.ndarray              # (n, N) per-agent eigenvector estimates
    u_c_norm: np.ndarray        # (n,) aggregate ||u^c|| (commanded, pre-filter)
    u_c_norm_agents: np.ndarray  # (n, N)
    positions: np.ndarray       # (n, N, m)
    connected: np.ndarray       # (n,) bool
    estimates_valid: np.ndarray  # (n,) bool; latched False after first loss

    def __len__(self):
        return self.t.shape[0]

    def record(self, k: int) -> "TraceRecord":
        return TraceRecord(t=float(self.t[k]),
                           lambda2_true=float(self.lambda2_true[k]),
                           lambda2_est=self.lambda2_est[k],
                           u_c_norm=float(self.u_c_norm[k]),
                           u_c_norm_agents=self.u_c_norm_agents[k],
                           positions=self.positions[k],
                           connected=bool(self.connected[k]),
                           estimates_valid=bool(self.estimates_valid[k]))


@dataclass(frozen=True)
class TraceRecord:
    t: float
    lambda2_true: float
    lambda2_est: np.ndarray
    u_c_norm: float
    u_c_norm_agents: np.ndarray
    positions: np.ndarray
    connected: bool
    estimates_valid: bool


@dataclass
class RunResult:
    trace: Trace
    outcome: str                # "maintained" | "lost"
    t_loss: float | None
    config: ScenarioConfig
    seed: int


def _initial_positions(cfg: ScenarioConfig, rng: np.random.Generator) -> np.ndarray:
    lo = np.asarray(cfg.world_bounds[0], dtype=float)
    hi = np.asarray(cfg.world_bounds[1], dtype=float)
    for _ in range(cfg.max_init_retries):
        p = rng.uniform(lo, hi, size=(cfg.n_agents, cfg.dim))
        g = graph.build_graph(p, cfg.range_params)
        if graph.spectral_oracle(g).lambda2 > cfg.loss_tol:
            return p
    raise ScenarioError(
        f"no connected initial placement after {cfg.max_init_retries} retries "
        f"(N={cfg.n_agents}, R={cfg.range_params.radius}, bounds={cfg.world_bounds})")


def _obstacle_field(cfg: ScenarioConfig,
                    rng: np.random.Generator) -> control.ObstacleField:
    lo = np.asarray(cfg.world_bounds[0], dtype=float)
    hi = np.asarray(cfg.world_bounds[1], dtype=float)
    o = cfg.obstacles
    pts = rng.uniform(lo, hi, size=(o.count, cfg.dim))
    if o.count:
        pts[:, 0] = rng.uniform(o.band[0], o.band[1], size=o.count)
    return control.ObstacleField(points=pts,
                                 influence_radius=o.influence_radius,
                                 repulsion_gain=o.repulsion_gain,
                                 u_obst_max=o.u_obst_max)


def run_scenario(config: ScenarioConfig) -> RunResult:
    """Run one scenario to t_final; deterministic given (config, seed)."""
    cfg = config
    root = np.random.SeedSequence(cfg.seed)
    init_ss, agents_ss = root.spawn(2)
    init_rng = np.random.Generator(np.random.PCG64(init_ss))
    streams = disturbance.spawn_streams(agents_ss, cfg.n_agents)

    positions = _initial_positions(cfg, init_rng)
    field_ = _obstacle_field(cfg, init_rng)
    est = estimator.init_network_state(
        init_rng.uniform(-1.0, 1.0, size=cfg.n_agents))
    filt = actuation.FilterState.at_rest(cfg.n_agents, cfg.dim,
                                         cfg.actuation.cutoff)
    form_spec = cfg.formation_spec() if cfg.mode == "formation" else None
    sigma = cfg.range_params.sigma

    n = cfg.n_steps
    tr = Trace(t=np.empty(n), lambda2_true=np.empty(n),
               lambda2_est=np.empty((n, cfg.n_agents)),
               nu=np.empty((n, cfg.n_agents)),
               u_c_norm=np.empty(n),
               u_c_norm_agents=np.empty((n, cfg.n_agents)),
               positions=np.empty((n, cfg.n_agents, cfg.dim)),
               connected=np.empty(n, dtype=bool),
               estimates_valid=np.empty(n, dtype=bool))

    valid = True
    t_loss = None
    for k in range(n):
        t = k * cfg.dt
        g = graph.build_graph(positions, cfg.range_params)
        spec = graph.spectral_oracle(g)  # trace only, never reaches agents
        connected = spec.lambda2 > cfg.loss_tol
        if not connected:
            if t_loss is None:
                t_loss = t
            valid = False

        if cfg.disturbance.active:
            received = disturbance.corrupt_received(est.nu, cfg.disturbance,
                                                    streams)
        else:
            received = np.tile(est.nu, (cfg.n_agents, 1))
        est = estimator.step_all(est, received, g.weights, cfg.gains, cfg.dt)
        l2i = estimator.lambda2_local_all(est, cfg.gains)
        grads = estimator.lambda2_gradient_local_all(
            est.nu, received, positions, g.weights, sigma)

        if t < cfg.t_settle:
            # estimator boot window: no motion commands until the local
            # connectivity estimates have settled
            zeros = np.zeros_like(positions)
            u_c, u_d, u_obst = zeros, zeros, zeros
        else:
            u_c = control.connectivity_control_all(l2i, grads, cfg.control)
            if cfg.mode == "formation":
                u_d = control.formation_control(positions, l2i, g, form_spec,
                                                cfg.control, sigma, est.nu,
                                                received)
            else:
                u_d = control.rendezvous_control(positions, g)
            u_obst = control.obstacle_avoidance_all(positions, field_, streams)

        if cfg.actuation.ideal:
            applied = control.total_control(u_c, u_d, u_obst)
        elif cfg.actuation.filter_total:
            filt, applied = actuation.lowpass_step(
                filt, control.total_control(u_c, u_d, u_obst), cfg.dt)
        else:
            filt, u_c_f = actuation.lowpass_step(filt, u_c, cfg.dt)
            applied = control.total_control(u_c_f, u_d, u_obst)

        tr.t[k] = t
        tr.lambda2_true[k] = spec.lambda2
        tr.lambda2_est[k] = l2i
        tr.nu[k] = est.nu
        tr.u_c_norm_agents[k] = np.linalg.norm(u_c, axis=1)
        tr.u_c_norm[k] = np.linalg.norm(u_c)
        tr.positions[k] = positions
        tr.connected[k] = connected
        tr.estimates_valid[k] = valid

        positions = actuation.integrate_step(positions, applied, cfg.dt)
        if not np.all(np.isfinite(positions)):
            raise ArithmeticError(
                f"non-finite agent state at t={t:.6f} (step {k}); "
                f"last lambda2={spec.lambda2:.6g}, seed={cfg.seed}")

    outcome = "maintained" if t_loss is None else "lost"
    return RunResult(trace=tr, outcome=outcome, t_loss=t_loss,
                     config=cfg, seed=cfg.seed)


def run_with_reference(config: ScenarioConfig):
    """Run a scenario plus, when disturbances are active, the twin
    disturbance-free reference run with the same seed (the lambda2_bar trace)."""
    result = run_scenario(config)
    if not config.disturbance.active:
        return result, None
    clean = dataclasses.replace(
        config, disturbance=dataclasses.replace(config.disturbance,
                                                p_fail=0.0, eta=0.0))
    return result, run_scenario(clean)


def _run_seed(args):
    config, seed = args
    return run_scenario(dataclasses.replace(config, seed=seed))


def batch_run(config: ScenarioConfig, seeds, workers: int = 1):
    """Independent runs of config over seeds, order-stable.

    A failing run is logged and reported as None without aborting its
    siblings.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    results: list[RunResult | None] = []
    if workers > 1 and len(seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_run_seed, (config, s)) for s in seeds]
            for s, fut in zip(seeds, futures):
                try:
                    results.append(fut.result())
                except Exception:
                    log.exception("run with seed %s failed", s)
                    results.append(None)
    else:
        for s in seeds:
            try:
                results.append(_run_seed((config, s)))
            except Exception:
                log.exception("run with seed %s failed", s)
                results.append(None)
    return results
