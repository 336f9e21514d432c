#!/usr/bin/env python3
"""Maintenance rate vs additive measurement-noise variance.

Sweeps eta over {0, 0.1, 0.3, 0.5, 1.0, 5.0} with no communication failures,
20 seeds per cell, and writes per-run traces plus a summary table under
results/noise_sweep/.
"""

import sys

from connsim.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", "-o", "results/noise_sweep",
                   "--p-fail", "0", "--eta", "0,0.1,0.3,0.5,1.0,5.0",
                   "--seeds", "20", *sys.argv[1:]]))
