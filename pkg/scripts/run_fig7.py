"""Rate versus array size with N = M/2 and fixed overhead (d=2, L=4, m=6).

Extra arguments are passed through to the CLI, e.g. --trials 20 --seed 3.
"""

import sys

from hybridsim.cli import main

if __name__ == "__main__":
    argv = ["--preset", "fig7", "--out", "results/fig7.csv"] + sys.argv[1:]
    sys.exit(main(argv))
