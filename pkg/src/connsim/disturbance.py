"""Communication failure and additive Gaussian noise injection.

Every eigenvector-component estimate an agent receives is corrupted
independently, per step: with probability p_fail the value is replaced by the
default nu* = 1, and zero-mean Gaussian noise of variance eta is added on top
(also to the default, on a failed reception).

Randomness contract: numpy PCG64 generators, one independent stream per
(agent, purpose) spawned from the run seed via SeedSequence, with Gaussians
drawn by Generator.standard_normal (ziggurat) and scaled by sqrt(eta).  The
failure and noise streams are separate, so enabling noise never perturbs the
failure draw sequence, and every corruption call consumes exactly one uniform
and one standard-normal variate regardless of p_fail and eta.  Traces are
therefore bit-reproducible for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "DisturbanceConfig",
    "AgentStreams",
    "spawn_streams",
    "corrupt_estimate",
    "corrupt_received",
    "system_failure_rate",
]


@dataclass(frozen=True)
class DisturbanceConfig:
    p_fail: float = 0.0        # per-reception failure probability
    eta: float = 0.0           # noise variance
    nu_default: float = 1.0    # value substituted on a failed reception
    failure_scope: str = "link"  # "link": per receiving link; "broadcast": per sender

    def __post_init__(self):
        if not 0.0 <= self.p_fail <= 1.0:
            raise ValueError(f"p_fail must lie in [0, 1], got {self.p_fail}")
        if not (self.eta >= 0.0 and math.isfinite(self.eta)):
            raise ValueError(f"eta must be finite and >= 0, got {self.eta}")
        if self.failure_scope not in ("link", "broadcast"):
            raise ValueError(
                f"failure_scope must be 'link' or 'broadcast', got {self.failure_scope!r}")

    @property
    def active(self) -> bool:
        return self.p_fail > 0.0 or self.eta > 0.0


@dataclass
class AgentStreams:
    """Independent per-agent RNG streams, one per purpose."""

    fail: np.random.Generator
    noise: np.random.Generator
    misc: np.random.Generator  # e.g. degenerate obstacle-coincidence pushes


def spawn_streams(seed_seq: np.random.SeedSequence, n_agents: int) -> list[AgentStreams]:
    """One (fail, noise, misc) stream triple per agent, all independent."""
    streams = []
    for child in seed_seq.spawn(n_agents):
        fail_ss, noise_ss, misc_ss = child.spawn(3)
        streams.append(AgentStreams(
            fail=np.random.Generator(np.random.PCG64(fail_ss)),
            noise=np.random.Generator(np.random.PCG64(noise_ss)),
            misc=np.random.Generator(np.random.PCG64(misc_ss)),
        ))
    return streams


def corrupt_estimate(nu_true: float, cfg: DisturbanceConfig,
                     streams: AgentStreams) -> float:
    """Corrupt one received estimate: Bernoulli failure then additive noise.

    Draws exactly one uniform (failure stream) and one standard normal (noise
    stream) per call.
    """
    failed = streams.fail.random() < cfg.p_fail
    z = math.sqrt(cfg.eta) * streams.noise.standard_normal()
    return (cfg.nu_default if failed else float(nu_true)) + z


def corrupt_received(nus: np.ndarray, cfg: DisturbanceConfig,
                     streams: list[AgentStreams]) -> np.ndarray:
    """Corrupted reception matrix: entry [i, j] is agent j's estimate as seen
    by receiver i, each link corrupted independently.

    Per step each receiver consumes exactly N uniforms and N standard normals
    (its own streams), independent of topology and of (p_fail, eta); with
    failure_scope "broadcast" the failure draw is one uniform per *sender*
    (taken from the sender's failure stream) applied to all receivers.
    """
    nus = np.asarray(nus, dtype=float)
    n = nus.shape[0]
    received = np.tile(nus, (n, 1))
    if cfg.failure_scope == "broadcast":
        sender_failed = np.array(
            [streams[j].fail.random() < cfg.p_fail for j in range(n)])
        failed = np.tile(sender_failed, (n, 1))
    else:
        failed = np.empty((n, n), dtype=bool)
        for i in range(n):
            failed[i] = streams[i].fail.random(n) < cfg.p_fail
    noise = np.empty((n, n))
    scale = math.sqrt(cfg.eta)
    for i in range(n):
        noise[i] = scale * streams[i].noise.standard_normal(n)
    received[failed] = cfg.nu_default
    received += noise
    np.fill_diagonal(received, nus)  # an agent's own estimate is never corrupted
    return received


def system_failure_rate(n_agents: int, p_fail: float) -> float:
    """Expected number of failing agents per interaction: N * p_fail."""
    if n_agents < 1:
        raise ValueError(f"need at least one agent, got {n_agents}")
    return n_agents * p_fail
