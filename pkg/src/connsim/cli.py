"""Command-line front end.

Subcommands:
  run       one scenario; writes the trace CSV (with the disturbance-free
            reference column), run metrics, the effective config, and a plot
            script
  sweep     a (p_fail x eta x seed) grid of runs with per-run CSVs and a
            summary table
  spectrum  DFT of the control-effort column of an existing trace CSV
  validate  self-check property groups (oracle, gradients, filter,
            disturbance statistics, control equivalence)

Config files are YAML mirroring the ScenarioConfig structure (see
docs/config.md); --set dotted.key=value overrides are applied after parsing.
Exit codes: 0 success, 1 usage/config error, 2 runtime failure,
3 validation failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import analysis, engine, graph, validation
from .actuation import ActuationConfig
from .control import ControlParams
from .disturbance import DisturbanceConfig
from .engine import ObstacleParams, ScenarioConfig
from .estimator import EstimatorGains

__all__ = ["ConfigError", "parse_config", "main"]


class ConfigError(ValueError):
    pass


_SECTIONS = {
    "range": ("range_params", graph.RangeParams),
    "gains": ("gains", EstimatorGains),
    "control": ("control", ControlParams),
    "disturbance": ("disturbance", DisturbanceConfig),
    "actuation": ("actuation", ActuationConfig),
    "obstacles": ("obstacles", ObstacleParams),
}
_TOP_KEYS = {"n_agents", "dim", "mode", "formation_radius", "world_bounds",
             "dt", "t_final", "t_settle", "seed", "max_init_retries",
             "loss_tol"}
_TUPLE_KEYS = {"world_bounds", "band"}


def _coerce(value):
    if isinstance(value, list):
        return tuple(_coerce(v) for v in value)
    return value


def _build_section(name: str, cls, data: dict):
    fields = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown config key '{name}.{key}'")
        kwargs[key] = _coerce(value) if key in _TUPLE_KEYS else value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config section '{name}': {exc}") from exc


def parse_config(path=None, overrides=()) -> ScenarioConfig:
    """Read a YAML scenario config (all keys optional) and apply dotted-key
    overrides; unknown keys and invariant violations raise ConfigError naming
    the key."""
    data: dict = {}
    if path is not None:
        raw = Path(path).read_text()
        loaded = yaml.safe_load(raw)
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"config file {path} must be a mapping")
        data = loaded
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override must be key=value, got {item!r}")
        key, _, value = item.partition("=")
        node = data
        parts = key.strip().split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override key '{key}' conflicts with a scalar")
        node[parts[-1]] = yaml.safe_load(value)

    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            if not isinstance(value, dict):
                raise ConfigError(f"config section '{key}' must be a mapping")
            attr, cls = _SECTIONS[key]
            kwargs[attr] = _build_section(key, cls, value)
        elif key in _TOP_KEYS:
            kwargs[key] = _coerce(value) if key in _TUPLE_KEYS else value
        else:
            raise ConfigError(f"unknown config key '{key}'")
    try:
        return ScenarioConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config: {exc}") from exc


def config_to_dict(cfg: ScenarioConfig) -> dict:
    out = {}
    for f in dataclasses.fields(cfg):
        value = getattr(cfg, f.name)
        if dataclasses.is_dataclass(value):
            section = {k: (list(v) if isinstance(v, tuple) else v)
                       for k, v in dataclasses.asdict(value).items()}
            name = next(n for n, (attr, _) in _SECTIONS.items()
                        if attr == f.name)
            out[name] = section
        elif isinstance(value, tuple):
            out[f.name] = [list(v) if isinstance(v, tuple) else v for v in value]
        else:
            out[f.name] = value
    return out


def _write_run_outputs(outdir: Path, cfg: ScenarioConfig, seeds) -> None:
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config_effective.yaml").write_text(
        yaml.safe_dump(config_to_dict(cfg), sort_keys=False))
    (outdir / "seeds.txt").write_text("\n".join(str(s) for s in seeds) + "\n")
    # timestamps are confined here so result files stay byte-reproducible
    (outdir / "metadata.json").write_text(json.dumps(
        {"created_unix": time.time(), "seeds": list(seeds)}, indent=2) + "\n")


def cmd_run(args) -> int:
    cfg = parse_config(args.config, args.set or ())
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    outdir = Path(args.output)
    _write_run_outputs(outdir, cfg, [cfg.seed])
    result, reference = engine.run_with_reference(cfg)
    analysis.write_trace_csv(outdir / "trace.csv", result, reference)
    metrics = analysis.compute_metrics(result, reference)
    (outdir / "metrics.json").write_text(json.dumps(
        dataclasses.asdict(metrics), indent=2) + "\n")
    (outdir / "plot_trace.py").write_text(PLOT_TRACE)
    print(f"outcome: {result.outcome}"
          + (f" (t_loss={result.t_loss:.3f} s)" if result.t_loss is not None else "")
          + f", lambda2_min={metrics.lambda2_min:.4g} at t={metrics.t_min:.3f} s")
    print(f"trace written to {outdir / 'trace.csv'}")
    return 0


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError as exc:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from exc


def _cell_dir(outdir: Path, p_fail: float, eta: float) -> Path:
    return outdir / "cells" / f"pfail{p_fail:g}_eta{eta:g}"


def cmd_sweep(args) -> int:
    cfg = parse_config(args.config, args.set or ())
    p_fails = _parse_floats(args.p_fail)
    etas = _parse_floats(args.eta)
    if not p_fails or not etas:
        raise ConfigError("sweep grid must be nonempty")
    if args.seed_list:
        seeds = [int(s) for s in args.seed_list.split(",")]
    else:
        seeds = list(range(args.seeds))
    if not seeds:
        raise ConfigError("need at least one seed")
    outdir = Path(args.output)
    _write_run_outputs(outdir, cfg, seeds)

    cells = {}
    for p_fail in p_fails:
        for eta in etas:
            cell_cfg = dataclasses.replace(
                cfg, disturbance=dataclasses.replace(
                    cfg.disturbance, p_fail=p_fail, eta=eta))
            results = engine.batch_run(cell_cfg, seeds, workers=args.workers)
            cell_dir = _cell_dir(outdir, p_fail, eta)
            cell_dir.mkdir(parents=True, exist_ok=True)
            for seed, result in zip(seeds, results):
                if result is not None:
                    analysis.write_trace_csv(cell_dir / f"seed{seed}.csv", result)
            cells[(p_fail, eta)] = results
            done = sum(r is not None for r in results)
            kept = sum(r is not None and r.outcome == "maintained"
                       for r in results)
            print(f"cell p_fail={p_fail:g} eta={eta:g}: "
                  f"{kept}/{done} maintained ({len(seeds)} seeds)")

    rows = analysis.sweep_summary(cells)
    analysis.write_summary_csv(outdir / "summary.csv", rows)
    (outdir / "summary.txt").write_text(analysis.format_summary_table(rows) + "\n")
    (outdir / "plot_summary.py").write_text(PLOT_SUMMARY)
    print(f"summary written to {outdir / 'summary.csv'}")
    return 0


def cmd_spectrum(args) -> int:
    trace = analysis.read_trace_csv(args.trace)
    t = trace["t"]
    dt = float(t[1] - t[0])
    result = analysis.spectrum(trace["uc_norm"], dt, t=t,
                               threshold_hz=args.threshold)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    analysis.write_spectrum_csv(outdir / "spectrum.csv", result)
    (outdir / "plot_spectrum.py").write_text(PLOT_SPECTRUM)
    print(f"hf_fraction (> {args.threshold:g} Hz): {result.hf_fraction:.6g}")
    print(f"spectrum written to {outdir / 'spectrum.csv'}")
    return 0


def cmd_validate(args) -> int:
    return 0 if validation.run_all(report=print) else 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="connsim",
        description="Decentralized connectivity-maintenance simulator with "
                    "communication failure and noise injection")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", default=None,
                       help="YAML scenario config (defaults apply if omitted)")
        p.add_argument("-o", "--output", default="out",
                       help="output directory (created if absent)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="dotted-key config override, e.g. "
                            "disturbance.p_fail=0.2")

    p_run = sub.add_parser("run", help="run a single scenario")
    common(p_run)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a (p_fail x eta x seed) grid")
    common(p_sweep)
    p_sweep.add_argument("--p-fail", default="0",
                         help="comma-separated p_fail values")
    p_sweep.add_argument("--eta", default="0",
                         help="comma-separated eta values")
    p_sweep.add_argument("--seeds", type=int, default=1,
                         help="number of seeds (0..n-1)")
    p_sweep.add_argument("--seed-list", default=None,
                         help="explicit comma-separated seed list")
    p_sweep.add_argument("--workers", type=int, default=1,
                         help="parallel runs (within-run determinism preserved)")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_spec = sub.add_parser("spectrum", help="control-effort spectrum of a trace")
    p_spec.add_argument("trace", help="trace CSV produced by run/sweep")
    p_spec.add_argument("-o", "--output", default="out")
    p_spec.add_argument("--threshold", type=float, default=10.0,
                        help="high-frequency threshold in Hz")
    p_spec.set_defaults(fn=cmd_spectrum)

    p_val = sub.add_parser("validate", help="run self-check property groups")
    p_val.set_defaults(fn=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, engine.ScenarioError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure
        print(f"error: {exc}", file=sys.stderr)
        return 2


PLOT_TRACE = """\
#!/usr/bin/env python3
\"\"\"Plot lambda2 / lambda2_i / lambda2_bar and the control effort of trace.csv.\"\"\"
import numpy as np
import matplotlib.pyplot as plt

with open("trace.csv") as fh:
    names = fh.readline().strip().split(",")
data = np.loadtxt("trace.csv", delimiter=",", skiprows=1)
col = {n: data[:, k] for k, n in enumerate(names)}
t = col["t"]

fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(8, 7))
for n in names:
    if n.startswith("lambda2_i_"):
        ax1.plot(t, col[n], lw=0.6, alpha=0.6, label=n)
ax1.plot(t, col["lambda2"], "k", lw=1.5, label="lambda2")
ax1.plot(t, col["lambda2_bar"], "k--", lw=1.0, label="lambda2_bar")
ax1.axhline(0, color="r", lw=0.5)
ax1.set_ylabel("algebraic connectivity")
ax1.legend(fontsize=7, ncol=3)
ax2.plot(t, col["uc_norm"], lw=0.7)
ax2.set_ylabel("||u^c||")
ax2.set_xlabel("t [s]")
fig.tight_layout()
fig.savefig("trace.png", dpi=150)
print("wrote trace.png")
"""

PLOT_SUMMARY = """\
#!/usr/bin/env python3
\"\"\"Plot maintenance rate vs p_fail per eta from summary.csv.\"\"\"
import numpy as np
import matplotlib.pyplot as plt

data = np.genfromtxt("summary.csv", delimiter=",", names=True)
data = np.atleast_1d(data)
fig, ax = plt.subplots()
for eta in np.unique(data["eta"]):
    rows = data[data["eta"] == eta]
    order = np.argsort(rows["p_fail"])
    ax.plot(rows["p_fail"][order], rows["maintenance_rate"][order],
            marker="o", label=f"eta={eta:g}")
ax.set_xlabel("p_fail")
ax.set_ylabel("maintenance rate")
ax.set_ylim(-0.05, 1.05)
ax.legend()
fig.tight_layout()
fig.savefig("summary.png", dpi=150)
print("wrote summary.png")
"""

PLOT_SPECTRUM = """\
#!/usr/bin/env python3
\"\"\"Plot the control-effort spectrum from spectrum.csv.\"\"\"
import numpy as np
import matplotlib.pyplot as plt

data = np.loadtxt("spectrum.csv", delimiter=",", skiprows=1)
fig, ax = plt.subplots()
ax.semilogy(data[1:, 0], data[1:, 1], lw=0.6)
ax.axvline(10.0, color="r", lw=0.8, label="10 Hz")
ax.set_xlabel("frequency [Hz]")
ax.set_ylabel("|U^c(f)|")
ax.legend()
fig.tight_layout()
fig.savefig("spectrum.png", dpi=150)
print("wrote spectrum.png")
"""


if __name__ == "__main__":
    sys.exit(main())
