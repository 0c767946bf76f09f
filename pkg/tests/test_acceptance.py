"""Acceptance gate: every criterion at its stated tolerance.

Each test records one PASS/FAIL line; the lines are printed together at the
end of the pytest run (see conftest.py) and also when this file is run as
a script.
"""

import subprocess
import sys
import time

import numpy as np
import pytest

from hybridsim.arnoldi import (
    arnoldi_build,
    distortion_transcript,
    eig_perturbation_bound,
    eigenvalue_gaps,
    random_unit_vector,
    residual_certificate,
    ritz_extract,
)
from hybridsim.channel import HybridConfig, TrialStreams, sample_channel
from hybridsim.decomp import bcd_sd, columnwise_decompose, decompose_vector, omp_decompose
from hybridsim.decomp import ula_dictionary
from hybridsim.harness import PRESETS, ScenarioConfig, preset, run_scenario
from hybridsim.hybridlink import (
    codebook_blocks,
    noiseless_gap_bound,
    estimate_subspaces,
    mtqr,
    overhead,
    raid_echo,
    sed,
)
from hybridsim.matlin import dft_matrix, principal_angles, qr_orthonormal, svd_thin

RESULTS = []

pytestmark = pytest.mark.slow


def report(name, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def summary_by(res, scheme, key):
    return {rec[key]: rec for rec in res.summary if rec["scheme"] == scheme}


# ------------------------------------------------------------ 1. exactness

def test_raid_identity_noiseless():
    rng = np.random.default_rng(101)
    dims = [(16, 8, 4), (32, 16, 4), (64, 32, 8)]
    worst = 0.0
    t0 = time.perf_counter()
    for k in range(1000):
        M, N, r = dims[k % 3]
        d = int(rng.integers(1, min(r, 4) + 1))
        ch = sample_channel(M, N, int(rng.integers(1, 6)), rng)
        cfg = HybridConfig(M=M, N=N, r=r, d=d, m=1)
        q = random_unit_vector(M, rng) * rng.uniform(0.1, 1.0)
        rec = raid_echo(q, ch, cfg)
        H = ch.H
        A = H.conj().T @ H
        expected = d**2 * A @ (rec.q - rec.e_t) - d * H.conj().T @ rec.e_r
        worst = max(worst, np.linalg.norm(rec.p - expected) / max(1.0, np.linalg.norm(rec.p)))
    elapsed = time.perf_counter() - t0
    report("noiseless RAID echo identity", worst <= 1e-9 and elapsed < 30,
           f"1000 echoes, worst relative error {worst:.2e} (tol 1e-9), {elapsed:.1f}s (limit 30s)")


def test_dft_partition_cancellation():
    sizes = set()
    for name in PRESETS:
        cfg = preset(name, trials=1)
        if cfg.mode != "link":
            continue
        for pt in cfg.expand():
            sizes.add((pt["M"], pt["r"]))
            sizes.add((pt["N"], pt["r"]))
    worst = 0.0
    for n, r in sorted(sizes):
        S = sum(W @ W.conj().T for W in codebook_blocks(dft_matrix(n), r))
        worst = max(worst, np.linalg.norm(S - np.eye(n)))
    report("DFT partition cancellation", worst <= 1e-10,
           f"{len(sizes)} (n, r) pairs from all presets, worst ||sum W W^H - I||_F = {worst:.2e}")


def _distorted_runs(n_runs=500, seed=202):
    """Arnoldi on A = H^H H with additive CN(0, s^2 I) distortion on every matvec.

    M in {16, 32, 64}, m in 1..8, L in 1..5, and a relative distortion
    level rho = s sqrt(M) / ||A||_2 drawn log-uniformly from [1e-6, 1].
    """
    rng = np.random.default_rng(seed)
    for _ in range(n_runs):
        M = int(rng.choice([16, 32, 64]))
        m = int(rng.integers(1, 9))
        ch = sample_channel(M, M // 2, int(rng.integers(1, 6)), rng)
        A = ch.H.conj().T @ ch.H
        rho = 10 ** rng.uniform(-6, 0)
        s = rho * np.linalg.norm(A, 2) / np.sqrt(M)

        def oracle(q, A=A, s=s):
            return A @ q + s * crandn(rng, A.shape[0]) / np.sqrt(2)

        state = arnoldi_build(oracle, m, random_unit_vector(M, rng))
        yield rho, A, state


def test_residual_bound_sum_of_squares():
    violations, tri_violations, worst = 0, 0, 0.0
    small = []
    for rho, A, state in _distorted_runs():
        cert = residual_certificate(state, A)
        violations += not cert.holds
        tri_violations += not cert.holds_triangle
        excess = np.max((cert.lhs - cert.rhs) / np.maximum(cert.rhs, 1e-300))
        worst = max(worst, excess)
        if not cert.holds:
            small.append(rho)
    detail = (f"{violations}/500 runs exceed c + ||I-QQ^H||_F^2 ||W||_F^2 "
              f"(worst relative excess {worst:.2e}"
              + (f", all at rho <= {max(small):.1e}" if small else "")
              + f"); triangle form violated in {tri_violations}/500")
    report("residual bound for lifted eigenpairs", violations == 0, detail)


def test_eigenvalue_perturbation_bound():
    violations, worst_ratio = 0, 0.0
    for _, A, state in _distorted_runs():
        tr = distortion_transcript(state, A)
        gap = np.max(eigenvalue_gaps(state, A, tr))
        bound = eig_perturbation_bound(tr, state.m)
        violations += gap > bound * (1 + 1e-9)
        worst_ratio = max(worst_ratio, gap / bound if bound > 0 else 0.0)
    report("Bauer-Fike eigenvalue bound", violations == 0,
           f"{violations}/500 violations, worst gap/bound {worst_ratio:.3f}")


def test_noiseless_sed_gap_bound():
    rng = np.random.default_rng(303)
    dims = [(16, 8, 4), (32, 16, 4), (64, 32, 8)]
    violations, worst = 0, 0.0
    for k in range(500):
        M, N, r = dims[k % 3]
        d = int(rng.integers(1, 3))
        ch = sample_channel(M, N, int(rng.integers(d, 6)), rng)
        cfg = HybridConfig(M=M, N=N, r=r, d=d, m=3 * d)
        est = estimate_subspaces(ch, cfg, TrialStreams(303, k), noiseless=True)
        for side, oracle in ((est.gamma, est.bs_oracle), (est.phi, est.ms_oracle)):
            gap = np.max(eigenvalue_gaps(side.state, oracle.operator))
            bound = noiseless_gap_bound(ch.H, side.state.m, d)
            violations += gap > bound
            worst = max(worst, gap / bound)
    report("noiseless SED eigenvalue-gap bound", violations == 0,
           f"{violations}/500 runs violate m||H||_F^2(3 + 1/(d||H||_F)), worst gap/bound {worst:.2e}")


def test_rank_one_closed_form_vs_grid():
    rng = np.random.default_rng(404)
    phases = 2 * np.pi * np.arange(64) / 64
    p0, p1 = np.meshgrid(phases, phases, indexing="ij")
    F = np.stack([np.exp(1j * p0).ravel(), np.exp(1j * p1).ravel()], axis=1) / np.sqrt(2)
    worst = -np.inf
    for _ in range(1000):
        gamma = crandn(rng, 2)
        f, g = decompose_vector(gamma)
        closed = np.linalg.norm(gamma - f * g) ** 2
        gs = np.linspace(0.0, 2 * np.sum(np.abs(gamma)), 200)
        # ||gamma - f g||^2 = ||gamma||^2 - 2 g Re(f^H gamma) + g^2, since ||f|| = 1
        corr = np.real(F.conj() @ gamma)
        grid = np.linalg.norm(gamma) ** 2 - 2 * np.outer(corr, gs) + gs[None, :] ** 2
        worst = max(worst, closed - grid.min())
    report("rank-one closed form vs brute-force grid", worst <= 1e-9,
           f"1000 random gamma, max(closed - grid min) = {worst:.2e} (tol 1e-9)")


def test_power_constraint():
    rng = np.random.default_rng(505)
    worst_unit, worst_link = -np.inf, -np.inf
    D = ula_dictionary(64)
    for d in range(1, 5):
        for _ in range(50):
            T = qr_orthonormal(crandn(rng, 64, d))
            Tn = T / np.linalg.norm(T)
            for pair in (bcd_sd(Tn), columnwise_decompose(Tn), omp_decompose(Tn, D, 10)):
                worst_unit = max(worst_unit, np.linalg.norm(pair.product) ** 2 - d)
    for trial in range(40):
        streams = TrialStreams(505, trial)
        ch = sample_channel(64, 32, 3, streams("channel"))
        for d in (1, 2, 3):
            cfg = HybridConfig.from_db(0.0, M=64, N=32, r=8, d=d, m=3 * d)
            for out in (sed(ch, cfg, streams), mtqr(ch, cfg, 6, streams)):
                worst_link = max(worst_link, np.linalg.norm(out.F @ out.G) ** 2 / d - 1)
    ok = worst_unit <= 0 and worst_link <= 1e-9
    report("power constraint ||FG||_F^2 <= d", ok,
           f"unit-norm targets: max(||FG||^2 - d) = {worst_unit:.2e}; "
           f"scaled link precoders: max(||FG||^2/d - 1) = {worst_link:.2e}")


# ------------------------------------------------------------ 2. figures

def test_decomposition_distance_ordering():
    t0 = time.perf_counter()
    res = run_scenario(preset("fig3", trials=200, seed=3))
    elapsed = time.perf_counter() - t0
    bcd = summary_by(res, "BCD-SD", "d")
    col = summary_by(res, "columnwise", "d")
    omp = summary_by(res, "OMP", "d")
    ok = elapsed < 300
    parts = []
    for d in range(1, 5):
        b, c, o = (x[d]["decomp_dist_mean"] for x in (bcd, col, omp))
        ok &= b < o and b <= c <= o
        parts.append(f"d={d}: {b:.3f}/{c:.3f}/{o:.3f}")
    report("decomposition distance BCD-SD < OMP, column-wise between", ok,
           "BCD/col/OMP " + ", ".join(parts) + f"; {elapsed:.1f}s")


def test_rate_vs_snr():
    t0 = time.perf_counter()
    cfg = ScenarioConfig(M=128, N=64, d=2, L=3, m=6, trials=100, seed=4,
                         snr_db=[-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0],
                         schemes=("SED", "MTQR", "OPT"))
    res = run_scenario(cfg)
    elapsed = time.perf_counter() - t0
    s, q, o = (summary_by(res, x, "snr_db") for x in ("SED", "MTQR", "OPT"))
    ok = elapsed < 900
    parts = []
    for snr in cfg.snr_db:
        rs, rq, ro = s[snr]["rate_bits_mean"], q[snr]["rate_bits_mean"], o[snr]["rate_bits_mean"]
        if snr >= 0:
            ok &= rs >= 0.9 * ro
        if snr >= -10:
            ok &= abs(rs - rq) <= 0.15 * max(rs, rq)
        parts.append(f"{snr:g}dB {rs:.2f}/{rq:.2f}/{ro:.2f}")
    report("rate vs SNR: SED within 10% of R* (>=0 dB), SED~MTQR within 15% (>=-10 dB)", ok,
           "SED/MTQR/R* " + ", ".join(parts) + f"; {elapsed:.1f}s")


def test_rate_vs_path_count():
    cfg = ScenarioConfig(M=64, N=32, d=2, m=6, trials=100, seed=5, snr_db=[-5.0],
                         points=[{"L": L} for L in (2, 4, 6, 8)], schemes=("SED", "MTQR"))
    res = run_scenario(cfg)
    ok = True
    parts = []
    for scheme in ("SED", "MTQR"):
        by_L = summary_by(res, scheme, "L")
        r2, r8 = by_L[2]["rate_bits_mean"], by_L[8]["rate_bits_mean"]
        drop = (r2 - r8) / r2
        ok &= drop < 0.25
        parts.append(f"{scheme} L=2..8: " + "/".join(f"{by_L[L]['rate_bits_mean']:.2f}"
                                                     for L in (2, 4, 6, 8))
                     + f" (drop {100 * drop:.1f}%)")
    report("rate degrades < 25% from L=2 to L=8 at -5 dB", ok, "; ".join(parts))


def test_angle_vs_snr():
    snrs = [-10.0, 0.0, 10.0, 20.0]
    cfg = ScenarioConfig(M=64, N=32, d=3, L=4, m=6, trials=100, seed=6, snr_db=snrs,
                         schemes=("SED", "MTQR"))
    res = run_scenario(cfg)
    ok = True
    parts = []
    for scheme in ("SED", "MTQR"):
        by = summary_by(res, scheme, "snr_db")
        ang = [by[s]["subspace_angle_rad_mean"] for s in snrs]
        ok &= all(a > b for a, b in zip(ang, ang[1:]))
        parts.append(f"{scheme}: " + " > ".join(f"{a:.3f}" for a in ang))
    report("largest principal angle strictly decreasing over -10..20 dB", ok, "; ".join(parts))


def test_overhead_table():
    c3 = HybridConfig(M=128, N=64, r=16, d=1, m=3)
    c6 = HybridConfig(M=128, N=64, r=16, d=2, m=6)
    got = (overhead("SED", c3), overhead("SED", c6), overhead("MTQR", c6, 6))
    report("overhead table", got == (72, 144, 144),
           f"SED(m=3)={got[0]}, SED(m=6)={got[1]}, MTQR(d=2, I=6)={got[2]}; expected 72/144/144")


# ------------------------------------------------------------ 3. convergence

def test_noise_free_full_depth_recovery():
    rng = np.random.default_rng(707)
    worst = 0.0
    for _ in range(100):
        M, N, d = 64, 32, int(rng.integers(1, 4))
        ch = sample_channel(M, N, d, rng)
        A = ch.H.conj().T @ ch.H
        state = arnoldi_build(lambda q, A=A: A @ q, M, random_unit_vector(M, rng))
        est = ritz_extract(state, d)
        worst = max(worst, np.max(principal_angles(est.basis, svd_thin(ch.H, d).right)))
    report("exact-oracle recovery with m = M", worst <= 1e-6,
           f"100 rank-d channels, worst principal angle {worst:.2e} rad (tol 1e-6)")


# ------------------------------------------------------------ 4. determinism

def test_determinism(tmp_path):
    same = []
    for name in PRESETS:
        outs = []
        for k in range(2):
            out = tmp_path / f"{name}_{k}.csv"
            proc = subprocess.run(
                [sys.executable, "-m", "hybridsim", "--preset", name, "--trials", "1",
                 "--seed", "2718", "--out", str(out)],
                capture_output=True, text=True,
            )
            assert proc.returncode == 0, proc.stderr
            outs.append(out.read_bytes())
        same.append((name, outs[0] == outs[1]))
    ok = all(s for _, s in same)
    report("byte-identical preset reruns", ok,
           ", ".join(f"{n}:{'same' if s else 'DIFFERENT'}" for n, s in same))


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
