"""Rate versus number of paths L at -5 dB (M=64, N=32, d=2, m=6).

Extra arguments are passed through to the CLI, e.g. --trials 20 --seed 3.
"""

import sys

from hybridsim.cli import main

if __name__ == "__main__":
    argv = ["--preset", "fig5", "--out", "results/fig5.csv"] + sys.argv[1:]
    sys.exit(main(argv))
