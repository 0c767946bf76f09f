"""Decomposition distance of BCD-SD, column-wise and OMP on random semi-unitary 64 x d targets.

Extra arguments are passed through to the CLI, e.g. --trials 20 --seed 3.
"""

import sys

from hybridsim.cli import main

if __name__ == "__main__":
    argv = ["--preset", "fig3", "--out", "results/fig3.csv"] + sys.argv[1:]
    sys.exit(main(argv))
