"""Self-check property groups behind the `validate` CLI subcommand.

Each check returns (passed, message) and is independent of the code path it
verifies: gradients are checked against central finite differences of the
oracle eigenvalue, the filter against the analytic frequency response, the
disturbance statistics against their target distribution, and the scalar
connectivity control against the modified-Laplacian row form.
"""

from __future__ import annotations

import math

import numpy as np

from . import control, disturbance, estimator, graph
from .actuation import FilterState, lowpass_step

__all__ = ["CHECKS", "run_all"]


def _random_connected(rng: np.random.Generator, n: int,
                      params: graph.RangeParams):
    for _ in range(200):
        p = rng.uniform(-2.0, 2.0, size=(n, 2))
        g = graph.build_graph(p, params)
        spec = graph.spectral_oracle(g)
        if spec.lambda2 > 1e-3 and spec.eigengap > 1e-3:
            return p, g, spec
    raise RuntimeError("failed to sample a connected configuration")


def check_spectral_oracle():
    params = graph.RangeParams(radius=10.0, delta=0.5)
    # complete graph on 5 coincident-distance agents: force unit weights
    w = np.ones((5, 5)) - np.eye(5)
    k5 = graph.CommGraph(weights=w, degrees=w.sum(1),
                         laplacian=np.diag(w.sum(1)) - w)
    lam_k5 = graph.spectral_oracle(k5).lambda2
    w3 = np.array([[0.0, 1, 0], [1, 0, 1], [0, 1, 0]])
    p3 = graph.CommGraph(weights=w3, degrees=w3.sum(1),
                         laplacian=np.diag(w3.sum(1)) - w3)
    lam_p3 = graph.spectral_oracle(p3).lambda2
    # two far-apart pairs: disconnected
    pts = np.array([[0.0, 0], [1, 0], [100, 0], [101, 0]])
    lam_disc = graph.spectral_oracle(
        graph.build_graph(pts, params)).lambda2
    ok = (abs(lam_k5 - 5.0) < 1e-8 and abs(lam_p3 - 1.0) < 1e-8
          and abs(lam_disc) < 1e-10)
    return ok, (f"lambda2(K5)={lam_k5:.12g} (want 5), "
                f"lambda2(P3)={lam_p3:.12g} (want 1), "
                f"lambda2(2 components)={lam_disc:.3g} (want 0)")


def check_gradient(n_configs: int = 50, h: float = 1e-6, tol: float = 1e-4):
    rng = np.random.default_rng(7)
    params = graph.RangeParams(radius=3.0, delta=0.05)
    worst = 0.0
    done = 0
    while done < n_configs:
        n = int(rng.integers(3, 6))
        p, g, spec = _random_connected(rng, n, params)
        grads = graph.lambda2_gradient_exact(p, g, spec.fiedler,
                                             params.sigma,
                                             spec.eigengap).grads
        fd = np.zeros_like(grads)
        for i in range(n):
            for d in range(2):
                for s, sign in ((0, 1.0), (1, -1.0)):
                    q = p.copy()
                    q[i, d] += sign * h
                    lam = graph.spectral_oracle(
                        graph.build_graph(q, params)).lambda2
                    fd[i, d] += sign * lam / (2.0 * h)
        rel = np.linalg.norm(grads - fd) / max(np.linalg.norm(fd), 1e-12)
        worst = max(worst, rel)
        done += 1
    return worst < tol, (f"worst relative gradient error {worst:.3g} over "
                         f"{n_configs} configs (tol {tol})")


def check_filter():
    dt = 1e-4
    # DC gain
    # 3 s of settling: the step-response error e^(-cutoff t) must drop
    # below the 1e-9 DC tolerance (2 s leaves ~2e-9)
    st = FilterState(y=np.zeros((1, 1)), cutoff=10.0)
    for _ in range(30000):
        st, y = lowpass_step(st, np.ones((1, 1)), dt)
    dc = float(y[0, 0])

    def gain_at(omega):
        st = FilterState(y=np.zeros((1, 1)), cutoff=10.0)
        t = np.arange(0, 8.0, dt)
        out = np.empty_like(t)
        for k, tk in enumerate(t):
            st, y = lowpass_step(st, np.array([[math.sin(omega * tk)]]), dt)
            out[k] = y[0, 0]
        tail = out[t > 4.0]
        return float(np.max(np.abs(tail)))

    g10 = gain_at(10.0)
    g100 = gain_at(100.0)
    ok = (abs(dc - 1.0) < 1e-9
          and abs(g10 - 1.0 / math.sqrt(2.0)) < 0.01 * (1.0 / math.sqrt(2.0))
          and abs(g100 - 0.0995) < 0.02 * 0.0995)
    return ok, (f"DC gain {dc:.12g}, |H| at 10 rad/s = {g10:.5f} "
                f"(want 0.70711), at 100 rad/s = {g100:.5f} (want 0.0995)")


def check_disturbance(n_samples: int = 100_000):
    msgs = []
    ok = True
    streams = disturbance.spawn_streams(np.random.SeedSequence(11), 1)[0]
    p_fail = 0.2
    cfg = disturbance.DisturbanceConfig(p_fail=p_fail, eta=0.0)
    hits = sum(disturbance.corrupt_estimate(0.0, cfg, streams) == 1.0
               for _ in range(n_samples))
    se = math.sqrt(p_fail * (1 - p_fail) / n_samples)
    dev = abs(hits / n_samples - p_fail)
    ok &= dev < 3 * se
    msgs.append(f"failure rate off by {dev:.4f} (3 SE = {3 * se:.4f})")
    for eta in (0.1, 0.5, 5.0):
        cfg = disturbance.DisturbanceConfig(p_fail=0.0, eta=eta)
        z = np.array([disturbance.corrupt_estimate(0.0, cfg, streams)
                      for _ in range(n_samples)])
        var = float(z.var())
        ok &= abs(var - eta) < 0.04 * eta
        msgs.append(f"var(eta={eta}) = {var:.4f}")
    rate = disturbance.system_failure_rate(5, 0.2)
    ok &= rate == 1.0
    msgs.append(f"system failure rate 5 x 0.2 = {rate}")
    return bool(ok), "; ".join(msgs)


def check_control_equivalence(n_states: int = 100, tol: float = 1e-12):
    rng = np.random.default_rng(3)
    params = graph.RangeParams(radius=3.0, delta=0.05)
    cp = control.ControlParams(u_c_max=1e12)  # saturation off for the identity
    worst = 0.0
    for _ in range(n_states):
        n = int(rng.integers(2, 7))
        p = rng.uniform(-2.0, 2.0, size=(n, 2))
        g = graph.build_graph(p, params)
        nu = rng.normal(size=n)
        l2i = rng.uniform(0.3, 5.0, size=n)
        received = np.tile(nu, (n, 1))
        grads = estimator.lambda2_gradient_local_all(nu, received, p,
                                                     g.weights, params.sigma)
        u_scalar = control.connectivity_control_all(l2i, grads, cp)
        abar = control.modified_weight_matrix(l2i, nu, received, g.weights,
                                              cp, params.sigma)
        lbar = np.diag(abar.sum(1)) - abar
        u_row = -lbar @ p
        worst = max(worst, float(np.max(np.abs(u_scalar - u_row))))
    return worst < tol, (f"max |scalar form - row form| = {worst:.3g} "
                         f"over {n_states} states (tol {tol})")


CHECKS = [
    ("spectral-oracle", check_spectral_oracle),
    ("gradient", check_gradient),
    ("filter", check_filter),
    ("disturbance-statistics", check_disturbance),
    ("control-equivalence", check_control_equivalence),
]


def run_all(report=print) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        ok, msg = fn()
        all_ok &= ok
        report(f"{'PASS' if ok else 'FAIL'}  {name}: {msg}")
    return all_ok
