#!/usr/bin/env python3
"""Differential check: compositional solver vs exhaustive search.

Runs 500 randomized small instances by default; on the first mismatch the
offending instance is dumped to results/solver_mismatch.txt for replay with
edgestream.cph.load_instance. Extra CLI flags pass through (--instances,
--seed).
"""
from __future__ import annotations

import pathlib
import sys

from edgestream.cli_metrics import main

if __name__ == "__main__":
    pathlib.Path("results").mkdir(exist_ok=True)
    sys.exit(main([
        "oracle-check", "--instances", "500",
        "--dump", "results/solver_mismatch.txt",
        *sys.argv[1:],
    ]))
