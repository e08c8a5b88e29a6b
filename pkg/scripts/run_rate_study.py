#!/usr/bin/env python3
"""Convergence-rate check: log-log slope of integrated squared error
against the sample size, under rate-scaled tuning anchored at n = 200.

Writes rate_study.csv; the theoretical exponent for the built-in design
is -0.5.
"""

import sys

from npiv.cli import main

if __name__ == "__main__":
    argv = [
        "rate-study",
        "--sizes", "100,200,400,800",
        "--reps", "300",
        "--seed", "0",
        "--out", "rate_study.csv",
    ] + sys.argv[1:]
    raise SystemExit(main(argv))
