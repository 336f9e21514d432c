#!/usr/bin/env python3
"""Maintenance rate vs communication-failure probability.

Sweeps p_fail from 0 to 0.70 in 0.05 steps with no measurement noise,
20 seeds per cell, and writes per-run traces plus a summary table under
results/failure_sweep/.  Expect ~30 min on one core; trim --seeds or the
grid for a quick look.
"""

import sys

from connsim.cli import main

P_FAILS = ",".join(f"{0.05 * k:g}" for k in range(15))  # 0, 0.05, ..., 0.70

if __name__ == "__main__":
    sys.exit(main(["sweep", "-o", "results/failure_sweep",
                   "--p-fail", P_FAILS, "--eta", "0",
                   "--seeds", "20", *sys.argv[1:]]))
