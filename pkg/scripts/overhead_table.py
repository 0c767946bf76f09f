"""Channel-use overhead of SED and MTQR at M=128, N=64, r=16."""

from hybridsim import HybridConfig, overhead

if __name__ == "__main__":
    print(f"{'d':>2} {'m':>2} {'I':>2} {'SED':>5} {'MTQR':>5}")
    for d in (1, 2):
        m = 3 * d
        iters = 2 * m // d
        cfg = HybridConfig(M=128, N=64, r=16, d=d, m=m)
        print(f"{d:>2} {m:>2} {iters:>2} {overhead('SED', cfg):>5} {overhead('MTQR', cfg, iters):>5}")
