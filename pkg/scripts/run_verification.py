#!/usr/bin/env python3
"""Run the full verification gate: local identities, matching, coverage.

Exit code 0 only if everything holds; mirrors the CI usage of the CLI.
"""

import sys

from geomatch.cli import main

steps = [
    ["verify-local", "--p", "2", "--n-max", "3", "--M", "12"],
    ["verify-local", "--p", "3", "--n-max", "3", "--M", "12"],
    ["verify-matching", "--primes", "2,3,5", "--n-max", "6"],
    ["coverage", "--decomposition", "all", "--p", "2", "--M", "3",
     "--samples", "20000", "--seed", "1"],
    ["coverage", "--decomposition", "all", "--p", "3", "--M", "2",
     "--samples", "20000", "--seed", "1"],
]

worst = 0
for argv in steps:
    print(f"$ geomatch {' '.join(argv)}", file=sys.stderr)
    code = main(argv + ["--out", "/dev/null"])
    print(f"  -> exit {code}", file=sys.stderr)
    worst = max(worst, code)
sys.exit(worst)
