"""Rate versus SNR for SED, MTQR, the digital-ideal decomposition and the optimal bound (M=128, N=64, L=3).

Extra arguments are passed through to the CLI, e.g. --trials 20 --seed 3.
"""

import sys

from hybridsim.cli import main

if __name__ == "__main__":
    argv = ["--preset", "fig4", "--out", "results/fig4.csv"] + sys.argv[1:]
    sys.exit(main(argv))
