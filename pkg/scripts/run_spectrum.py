#!/usr/bin/env python3
"""Eigenvalue diagnostics of the built-in design's integral operator.

The exact spectrum decays like j**-2; the table written to
spectrum.csv includes a fitted decay exponent.
"""

import sys

from npiv.cli import main

if __name__ == "__main__":
    argv = [
        "spectrum",
        "--dgp",
        "--grid-size", "129",
        "--top", "20",
        "--out", "spectrum.csv",
    ] + sys.argv[1:]
    raise SystemExit(main(argv))
