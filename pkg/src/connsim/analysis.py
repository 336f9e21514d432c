"""Post-processing of simulation traces.

Turns raw traces into the quantities the resilience study reports:
connectivity minima, empirical estimation-error bounds (Xi: worst
|lambda2_i - lambda2| against the oracle; Xi': worst |lambda2_i -
lambda2_tilde| against the eigenvalue the estimated eigenvector implies),
maintenance statistics over seeds, and the frequency spectrum of the
aggregate connectivity control effort.  Analysis has global access to
recorded data; the agents themselves never do.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import RunResult

__all__ = [
    "RunMetrics",
    "SpectrumResult",
    "SweepCell",
    "compute_metrics",
    "lambda2_tilde_series",
    "spectrum",
    "sweep_summary",
    "write_trace_csv",
    "read_trace_csv",
    "write_spectrum_csv",
    "write_summary_csv",
    "format_summary_table",
]

FLOAT_FMT = "%.17g"  # 17 significant digits round-trip float64 exactly


@dataclass(frozen=True)
class RunMetrics:
    lambda2_min: float
    t_min: float
    xi_empirical: float          # max over agents/steps of |lambda2_i - lambda2|
    xi_prime_empirical: float    # max of |lambda2_i - lambda2_tilde|
    outcome: str
    t_loss: float | None
    lambda2_bar_min: float | None = None  # from the disturbance-free reference


@dataclass(frozen=True)
class SpectrumResult:
    freqs: np.ndarray       # Hz, [0, Nyquist]
    magnitude: np.ndarray   # one-sided DFT magnitude |X_b|
    hf_fraction: float      # fraction of spectral energy above threshold_hz
    threshold_hz: float


@dataclass(frozen=True)
class SweepCell:
    p_fail: float
    eta: float
    n_runs: int
    n_completed: int
    maintenance_rate: float
    mean_lambda2_min: float
    mean_xi: float
    mean_hf_fraction: float

    @property
    def complete(self) -> bool:
        return self.n_completed == self.n_runs


def lambda2_tilde_series(result: RunResult) -> np.ndarray:
    """Eigenvalue implied by the recorded eigenvector estimates:
    (k3/k2) * (1 - mean_i nu_i^2), computed with the true network average."""
    g = result.config.gains
    return g.k3 / g.k2 * (1.0 - np.mean(result.trace.nu**2, axis=1))


def compute_metrics(result: RunResult,
                    reference: RunResult | None = None) -> RunMetrics:
    tr = result.trace
    if len(tr) == 0:
        raise ValueError("empty trace")
    k_min = int(np.argmin(tr.lambda2_true))
    err = np.abs(tr.lambda2_est - tr.lambda2_true[:, None])
    l2t = lambda2_tilde_series(result)
    err_prime = np.abs(tr.lambda2_est - l2t[:, None])
    # estimates lose their validity once connectivity is lost
    mask = tr.estimates_valid if tr.estimates_valid.any() \
        else np.ones(len(tr), dtype=bool)
    return RunMetrics(
        lambda2_min=float(tr.lambda2_true[k_min]),
        t_min=float(tr.t[k_min]),
        xi_empirical=float(err[mask].max()),
        xi_prime_empirical=float(err_prime[mask].max()),
        outcome=result.outcome,
        t_loss=result.t_loss,
        lambda2_bar_min=(float(reference.trace.lambda2_true.min())
                         if reference is not None else None),
    )


def spectrum(u_c_series: np.ndarray, dt: float, t: np.ndarray | None = None,
             threshold_hz: float = 10.0) -> SpectrumResult:
    """One-sided DFT magnitude of the control-effort series on [0, Nyquist].

    No windowing or padding: a raw transform of the full record.
    hf_fraction is the share of total spectral energy in bins strictly above
    threshold_hz; by Parseval it is an energy ratio, invariant to amplitude
    scaling.
    """
    x = np.asarray(u_c_series, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("need a 1-D series of length >= 2")
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t is not None:
        steps = np.diff(np.asarray(t, dtype=float))
        if not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
            raise ValueError("series is not uniformly sampled at dt")
    n = x.size
    coeff = np.fft.rfft(x)
    freqs = np.fft.rfftfreq(n, d=dt)
    # Parseval weights: DC (and Nyquist for even n) appear once in the full DFT
    w = np.full(coeff.size, 2.0)
    w[0] = 1.0
    if n % 2 == 0:
        w[-1] = 1.0
    energy = w * np.abs(coeff) ** 2 / n
    total = energy.sum()
    hf = energy[freqs > threshold_hz].sum()
    return SpectrumResult(freqs=freqs, magnitude=np.abs(coeff),
                          hf_fraction=float(hf / total) if total > 0 else 0.0,
                          threshold_hz=threshold_hz)


def run_hf_fraction(result: RunResult, threshold_hz: float = 10.0) -> float:
    return spectrum(result.trace.u_c_norm, result.config.dt,
                    threshold_hz=threshold_hz).hf_fraction


def sweep_summary(cells: dict) -> list[SweepCell]:
    """Per-(p_fail, eta) statistics; cells maps (p_fail, eta) to a list of
    RunResult (None entries mark runs that did not complete)."""
    rows = []
    for (p_fail, eta) in sorted(cells):
        runs = cells[(p_fail, eta)]
        done = [r for r in runs if r is not None]
        if not done:
            rows.append(SweepCell(p_fail, eta, len(runs), 0,
                                  float("nan"), float("nan"),
                                  float("nan"), float("nan")))
            continue
        metrics = [compute_metrics(r) for r in done]
        rate = sum(m.outcome == "maintained" for m in metrics) / len(done)
        rows.append(SweepCell(
            p_fail=p_fail, eta=eta, n_runs=len(runs), n_completed=len(done),
            maintenance_rate=rate,
            mean_lambda2_min=float(np.mean([m.lambda2_min for m in metrics])),
            mean_xi=float(np.mean([m.xi_empirical for m in metrics])),
            mean_hf_fraction=float(np.mean([run_hf_fraction(r) for r in done])),
        ))
    return rows


def trace_header(n_agents: int, dim: int) -> str:
    cols = ["t", "lambda2", "lambda2_bar"]
    cols += [f"lambda2_i_{i + 1}" for i in range(n_agents)]
    cols.append("uc_norm")
    axes = "xyz"
    for i in range(n_agents):
        for d in range(dim):
            axis = axes[d] if d < len(axes) else f"q{d + 1}"
            cols.append(f"{axis}_{i + 1}")
    cols.append("connected")
    return ",".join(cols)


def write_trace_csv(path, result: RunResult,
                    reference: RunResult | None = None) -> None:
    """One row per trace record; lambda2_bar comes from the disturbance-free
    twin run (identical to lambda2 when disturbances were off)."""
    tr = result.trace
    n_agents = tr.lambda2_est.shape[1]
    dim = tr.positions.shape[2]
    bar = (reference.trace.lambda2_true if reference is not None
           else tr.lambda2_true)
    pos_flat = tr.positions.reshape(len(tr), n_agents * dim)
    data = np.column_stack([tr.t, tr.lambda2_true, bar, tr.lambda2_est,
                            tr.u_c_norm, pos_flat,
                            tr.connected.astype(float)])
    np.savetxt(path, data, fmt=FLOAT_FMT, delimiter=",",
               header=trace_header(n_agents, dim), comments="")


def read_trace_csv(path) -> dict:
    """Load a trace CSV back into column arrays keyed by header name."""
    with open(path) as fh:
        names = fh.readline().strip().split(",")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != len(names):
        raise ValueError(f"malformed trace CSV {path}: "
                         f"{data.shape[1]} columns, {len(names)} header names")
    return {name: data[:, k] for k, name in enumerate(names)}


def write_spectrum_csv(path, result: SpectrumResult) -> None:
    np.savetxt(path, np.column_stack([result.freqs, result.magnitude]),
               fmt=FLOAT_FMT, delimiter=",", header="freq_hz,magnitude",
               comments="")


SUMMARY_COLS = ("p_fail", "eta", "n_runs", "n_completed", "maintenance_rate",
                "mean_lambda2_min", "mean_xi", "mean_hf_fraction", "complete")


def _summary_rows(cells: list[SweepCell]):
    for c in cells:
        yield (c.p_fail, c.eta, c.n_runs, c.n_completed, c.maintenance_rate,
               c.mean_lambda2_min, c.mean_xi, c.mean_hf_fraction,
               int(c.complete))


def write_summary_csv(path, cells: list[SweepCell]) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(SUMMARY_COLS) + "\n")
        for row in _summary_rows(cells):
            fh.write(",".join(FLOAT_FMT % v if isinstance(v, float) else str(v)
                              for v in row) + "\n")


def format_summary_table(cells: list[SweepCell]) -> str:
    """Aligned-text rendering of the sweep summary."""
    rows = [[f"{v:.4g}" if isinstance(v, float) else str(v) for v in row]
            for row in _summary_rows(cells)]
    widths = [max(len(h), *(len(r[k]) for r in rows)) if rows else len(h)
              for k, h in enumerate(SUMMARY_COLS)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(SUMMARY_COLS, widths))]
    for r in rows:
        lines.append("  ".join(v.rjust(w) for v, w in zip(r, widths)))
    return "\n".join(lines)
