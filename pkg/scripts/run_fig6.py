"""Largest principal angle of the estimated precoder subspace versus SNR (M=64, N=32, d=3, L=4).

Extra arguments are passed through to the CLI, e.g. --trials 20 --seed 3.
"""

import sys

from hybridsim.cli import main

if __name__ == "__main__":
    argv = ["--preset", "fig6", "--out", "results/fig6.csv"] + sys.argv[1:]
    sys.exit(main(argv))
