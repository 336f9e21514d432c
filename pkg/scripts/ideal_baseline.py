#!/usr/bin/env python3
"""Disturbance-free baseline with ideal (unfiltered) actuation.

Runs the default pentagon-formation scenario over 20 seeds with the actuator
low-pass filter bypassed and no failures or noise; connectivity should be
maintained in every run.  Results go to results/ideal_baseline/.
"""

import sys

from connsim.cli import main

if __name__ == "__main__":
    sys.exit(main(["sweep", "-o", "results/ideal_baseline",
                   "--p-fail", "0", "--eta", "0", "--seeds", "20",
                   "--set", "actuation.ideal=true", *sys.argv[1:]]))
