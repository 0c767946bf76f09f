"""Echo-based subspace estimation over a hybrid analog-digital link.

Both ends only see signals after an analog combiner with ``r`` RF chains.
RAID echoing repeats each sounding over consecutive ``r``-column blocks of
a DFT matrix so the combiners sum to the identity, which turns a hybrid
link into a fully digital one at a cost of ``(M + N) / r`` channel uses
per echo.
"""

from dataclasses import dataclass, field

import numpy as np

from .arnoldi import arnoldi_build, random_unit_vector, ritz_extract
from .channel import TrialStreams, awgn
from .decomp import (
    HybridFactorPair,
    bcd_sd,
    columnwise_decompose,
    decompose_vector,
    omp_decompose,
    ula_dictionary,
)
from .errors import DimensionMismatch, RankDeficient
from .matlin import dft_matrix, qr_orthonormal
from .metrics import waterfill

__all__ = [
    "EchoRecord",
    "HybridPrecoderSet",
    "SubspaceEstimates",
    "RaidOracle",
    "codebook_blocks",
    "naive_echo",
    "raid_echo",
    "estimate_subspaces",
    "decompose_precoders",
    "sed",
    "mtqr",
    "overhead",
    "noiseless_gap_bound",
    "DECOMPOSERS",
]


@dataclass
class EchoRecord:
    """Everything that happened during one RAID echo.

    ``e_r`` is expressed in the units of the unnormalised combined vector
    ``s_tilde``: ``s_tilde = scale * w * u + e_r``. ``p`` is the raw
    estimate at the initiating side, before the ``d^2`` gain is removed.
    """

    q: np.ndarray
    f: np.ndarray
    g: float
    e_t: np.ndarray
    s_tilde: np.ndarray
    scale: float
    w: np.ndarray
    u: float
    e_r: np.ndarray
    p: np.ndarray
    noise_dl: np.ndarray
    noise_ul: np.ndarray
    uses: int
    direction: str = "bs"

    def to_dict(self):
        out = {"direction": self.direction, "uses": self.uses, "g": self.g,
               "u": self.u, "scale": self.scale}
        for name in ("q", "e_t", "s_tilde", "e_r", "p"):
            v = getattr(self, name)
            out[name] = {"re": v.real.tolist(), "im": v.imag.tolist()}
        return out


@dataclass
class HybridPrecoderSet:
    F: np.ndarray
    G: np.ndarray
    W: np.ndarray
    U: np.ndarray
    sigma_est: np.ndarray
    power_alloc: np.ndarray
    gamma_hat: np.ndarray | None = None
    phi_hat: np.ndarray | None = None
    decomp_dist: float = float("nan")
    uses: int = 0
    flags: list = field(default_factory=list)


def codebook_blocks(D, r):
    """Split the columns of ``D`` into consecutive blocks of width ``r``."""
    n_cols = D.shape[1]
    if n_cols % r:
        raise DimensionMismatch(f"{n_cols} codebook columns not divisible by r={r}")
    return [D[:, k : k + r] for k in range(0, n_cols, r)]


def _forward(channel, direction):
    if direction == "bs":
        return channel.H
    if direction == "ms":
        return channel.H.conj().T
    raise ValueError(f"direction must be 'bs' or 'ms', got {direction!r}")


def _variances(config, direction):
    # (first hop, return hop) noise variances at the receiving antennas
    if direction == "bs":
        return config.sigma_r_sq, config.sigma_t_sq
    return config.sigma_t_sq, config.sigma_r_sq


def naive_echo(q, channel, Fl, Wl, noise=None):
    """Single-shot echo through fixed analog filters ``Fl`` (BS) and ``Wl`` (MS).

    Returns the ``r``-dimensional BS observation
    ``Fl^H (H^H Wl Wl^H (H f g + n_r) + n_t)``. ``noise`` is an optional
    ``(n_r, n_t)`` pair of antenna-domain noise vectors.
    """
    H = channel.H
    f, g = decompose_vector(q)
    x = H @ (f * g)
    if noise is not None:
        x = x + noise[0]
    y = H.conj().T @ (Wl @ (Wl.conj().T @ x))
    if noise is not None:
        y = y + noise[1]
    return Fl.conj().T @ y


def raid_echo(q, channel, config, rng=None, ul_rng=None, direction="bs",
              digital=False, codebooks=None):
    """One repetition-aided echo of ``q``.

    ``direction='bs'`` sounds ``q`` from the BS and returns an estimate of
    ``d^2 H^H H q``; ``'ms'`` mirrors the roles to estimate ``d^2 H H^H q``.
    ``rng`` drives the first-hop noise and ``ul_rng`` (default: ``rng``)
    the return hop; noise is drawn once per sounding at the receiving
    antennas. ``digital=True`` bypasses both constant-modulus
    decompositions, which is useful for isolating protocol errors.
    ``codebooks`` overrides the ``(first-hop, return-hop)`` combiner
    matrices, e.g. with truncated DFT designs.
    """
    r, gain = config.r, config.d
    if config.M % r or config.N % r:
        raise DimensionMismatch(f"r={r} must divide M={config.M} and N={config.N}")
    fwd = _forward(channel, direction)
    rx_dim, tx_dim = fwd.shape
    q = np.asarray(q, dtype=complex).ravel()
    if q.size != tx_dim:
        raise DimensionMismatch(f"q has length {q.size}, expected {tx_dim}")
    var_1, var_2 = _variances(config, direction)
    ul_rng = rng if ul_rng is None else ul_rng
    if codebooks is None:
        codebooks = (dft_matrix(rx_dim), dft_matrix(tx_dim))
    rx_blocks = codebook_blocks(codebooks[0], r)
    tx_blocks = codebook_blocks(codebooks[1], r)

    # first hop
    if digital:
        f, g = q.copy(), 1.0
    else:
        f, g = decompose_vector(q)
    e_t = q - f * g
    clean = fwd @ (gain * f * g)
    s_tilde = np.zeros(rx_dim, dtype=complex)
    noise_dl = np.zeros(rx_dim, dtype=complex)
    for Wk in rx_blocks:
        n = awgn(rx_dim, var_1, rng) if rng is not None else np.zeros(rx_dim, complex)
        s_tilde += Wk @ (Wk.conj().T @ (clean + n))
        noise_dl += Wk @ (Wk.conj().T @ n)

    # return hop; the scalar normalisation is fed back with the echo
    scale = float(np.linalg.norm(s_tilde))
    s_hat = s_tilde / scale if scale > 0 else s_tilde
    if digital:
        w, u = s_hat.copy(), 1.0
    else:
        w, u = decompose_vector(s_hat)
    e_r = s_tilde - scale * (w * u)
    back = fwd.conj().T @ (gain * w * u)
    p = np.zeros(tx_dim, dtype=complex)
    noise_ul = np.zeros(tx_dim, dtype=complex)
    for Fk in tx_blocks:
        n = awgn(tx_dim, var_2, ul_rng) if ul_rng is not None else np.zeros(tx_dim, complex)
        p += Fk @ (Fk.conj().T @ (back + n))
        noise_ul += Fk @ (Fk.conj().T @ n)
    p = scale * p
    return EchoRecord(
        q=q, f=f, g=g, e_t=e_t, s_tilde=s_tilde, scale=scale, w=w, u=u, e_r=e_r,
        p=p, noise_dl=noise_dl, noise_ul=scale * noise_ul,
        uses=len(rx_blocks) + len(tx_blocks), direction=direction,
    )


class RaidOracle:
    """Matvec oracle for :func:`arnoldi_build` backed by RAID echoes.

    Returns ``p / d^2`` so the Arnoldi layer sees an estimate of ``A q``
    with ``A = H^H H`` (BS side) or ``H H^H`` (MS side). Every echo is kept
    in ``records`` and channel uses are tallied in ``uses``.
    """

    def __init__(self, channel, config, rng=None, ul_rng=None, direction="bs",
                 digital=False, codebooks=None):
        self.channel = channel
        self.config = config
        self.rng = rng
        self.ul_rng = ul_rng
        self.direction = direction
        self.digital = digital
        self.codebooks = codebooks
        self.records = []
        self.uses = 0

    def __call__(self, q):
        rec = raid_echo(q, self.channel, self.config, self.rng, self.ul_rng,
                        self.direction, self.digital, self.codebooks)
        self.records.append(rec)
        self.uses += rec.uses
        return rec.p / self.config.d**2

    @property
    def operator(self):
        H = self.channel.H
        return H.conj().T @ H if self.direction == "bs" else H @ H.conj().T

    def components(self):
        return {
            "e_t": np.stack([r.e_t for r in self.records], axis=1),
            "e_r": np.stack([r.e_r for r in self.records], axis=1),
            "noise_dl": np.stack([r.noise_dl for r in self.records], axis=1),
            "noise_ul": np.stack([r.noise_ul for r in self.records], axis=1),
        }


@dataclass
class SubspaceEstimates:
    gamma: object
    phi: object
    bs_oracle: RaidOracle
    ms_oracle: RaidOracle

    @property
    def uses(self):
        return self.bs_oracle.uses + self.ms_oracle.uses


def _streams(streams):
    if streams is None:
        return TrialStreams(0)
    if isinstance(streams, (int, np.integer)):
        return TrialStreams(int(streams))
    return streams


def estimate_subspaces(channel, config, streams=None, noiseless=False, digital=False):
    """BS- and MS-initiated SE-ARN runs over RAID echoes.

    Returns the two :class:`SubspaceEstimate` objects plus the oracles
    (which hold the echo transcript and channel-use tally).
    """
    streams = _streams(streams)
    M, N, d, m = config.M, config.N, config.d, config.m

    def rng(name):
        return None if noiseless else streams(name)

    bs = RaidOracle(channel, config, rng("dl_noise"), rng("ul_noise"), "bs", digital)
    state = arnoldi_build(bs, m, random_unit_vector(M, streams("q1")))
    gamma = ritz_extract(state, d)
    ms = RaidOracle(channel, config, rng("ms_ul_noise"), rng("ms_dl_noise"), "ms", digital)
    state = arnoldi_build(ms, min(m, N), random_unit_vector(N, streams("ms_q1")))
    phi = ritz_extract(state, d)
    return SubspaceEstimates(gamma=gamma, phi=phi, bs_oracle=bs, ms_oracle=ms)


def _digital_ideal(target):
    return HybridFactorPair(
        analog=target.copy(), digital=np.eye(target.shape[1], dtype=complex), objective=0.0
    )


DECOMPOSERS = {
    "bcd": lambda target, config: bcd_sd(target),
    "columnwise": lambda target, config: columnwise_decompose(target),
    "omp": lambda target, config: omp_decompose(
        target, ula_dictionary(target.shape[0]), config.r
    ),
    "ideal": lambda target, config: _digital_ideal(target),
}


def decompose_precoders(gamma_hat, phi_hat, sigma_est, config, method="bcd"):
    """Factor both estimated subspaces and scale the precoder to power ``d``.

    ``method`` is one of ``DECOMPOSERS``: ``'bcd'`` (BCD-SD), ``'columnwise'``,
    ``'omp'`` (dictionary of 256 ULA responses, ``r`` atoms) or ``'ideal'``
    (fully digital ``F G = gamma_hat``, no constant-modulus constraint).
    """
    decompose = DECOMPOSERS[method]
    tx = decompose(gamma_hat, config)
    rx = decompose(phi_hat, config)
    F, G = tx.analog, tx.digital
    power = np.linalg.norm(F @ G) ** 2
    flags = []
    if tx.singular or rx.singular:
        flags.append("singular_update")
    if power > 0:
        G = G * np.sqrt(config.d / power)
    else:
        flags.append("zero_precoder")
    return HybridPrecoderSet(
        F=F, G=G, W=rx.analog, U=rx.digital,
        sigma_est=np.asarray(sigma_est, dtype=float),
        power_alloc=waterfill(sigma_est, config.snr),
        gamma_hat=gamma_hat, phi_hat=phi_hat, decomp_dist=tx.objective, flags=flags,
    )


def sed(channel, config, streams=None, method="bcd", noiseless=False, digital=False):
    """Subspace estimation and decomposition.

    SE-ARN with RAID echoing from both ends, then BCD-SD on each estimated
    subspace, waterfilling on the Ritz singular values, and final scaling
    of ``F G`` to power ``d``.
    """
    est = estimate_subspaces(channel, config, streams, noiseless, digital)
    out = decompose_precoders(est.gamma.basis, est.phi.basis, est.gamma.ritz_values,
                              config, method)
    out.uses = est.uses
    return out


def _random_basis(n, d, rng):
    Z = rng.standard_normal((n, d)) + 1j * rng.standard_normal((n, d))
    return qr_orthonormal(Z)


def _sound_block(fwd, X, blocks, variance, gain, rng):
    """Send the columns of ``X`` one at a time, combining over all blocks."""
    rx_dim = fwd.shape[0]
    clean = fwd @ (gain * X)
    Y = np.zeros((rx_dim, X.shape[1]), dtype=complex)
    for Wk in blocks:
        if rng is not None:
            Nk = np.stack([awgn(rx_dim, variance, rng) for _ in range(X.shape[1])], axis=1)
        else:
            Nk = 0.0
        Y += Wk @ (Wk.conj().T @ (clean + Nk))
    return Y


def mtqr(channel, config, iterations, streams=None, method="bcd",
         noiseless=False, digital=False, X0=None):
    """Modified two-way QR over RAID-style soundings.

    Each iteration decomposes each column of ``X`` with the rank-one closed form, sends
    them on the downlink, orthonormalises at the MS to get ``Y``, then
    mirrors on the uplink to refresh ``X``. The final ``X`` and ``Y`` are
    factored with ``method`` exactly as in :func:`sed`.
    """
    if iterations < 1:
        raise ValueError("need at least one iteration")
    streams = _streams(streams)
    H = channel.H
    M, N, r, d = config.M, config.N, config.r, config.d
    dl_rng = None if noiseless else streams("mtqr_dl_noise")
    ul_rng = None if noiseless else streams("mtqr_ul_noise")
    init_rng = streams("mtqr_init")
    rx_blocks = codebook_blocks(dft_matrix(N), r)
    tx_blocks = codebook_blocks(dft_matrix(M), r)
    X = _random_basis(M, d, init_rng) if X0 is None else qr_orthonormal(X0)
    flags = []
    sigma = np.zeros(d)
    Y = None
    for _ in range(iterations):
        Xt = X if digital else columnwise_decompose(X).product
        Yraw = _sound_block(H, Xt, rx_blocks, config.sigma_r_sq, d, dl_rng)
        sigma = np.linalg.norm(Yraw, axis=0) / d
        try:
            Y = qr_orthonormal(Yraw)
        except RankDeficient:
            flags.append("restart_Y")
            Y = _random_basis(N, d, init_rng)
        Yt = Y if digital else columnwise_decompose(Y).product
        Zraw = _sound_block(H.conj().T, Yt, tx_blocks, config.sigma_t_sq, d, ul_rng)
        try:
            X = qr_orthonormal(Zraw)
        except RankDeficient:
            flags.append("restart_X")
            X = _random_basis(M, d, init_rng)
    out = decompose_precoders(X, Y, sigma, config, method)
    out.uses = iterations * d * (len(rx_blocks) + len(tx_blocks))
    out.flags.extend(flags)
    return out


def overhead(scheme, config, iterations=None):
    """Channel uses: ``2 m (M+N)/r`` for SED, ``d I (M+N)/r`` for MTQR."""
    per_echo = (config.M + config.N) // config.r
    scheme = scheme.upper()
    if scheme == "SED":
        return 2 * config.m * per_echo
    if scheme == "MTQR":
        if iterations is None:
            raise ValueError("MTQR overhead needs the iteration count")
        return config.d * iterations * per_echo
    raise ValueError(f"unknown scheme {scheme!r}")


def noiseless_gap_bound(H, m, d):
    """Noiseless eigenvalue-gap bound ``m ||H||_F^2 (3 + 1 / (d ||H||_F))``."""
    fro = np.linalg.norm(H)
    return float(m * fro**2 * (3.0 + 1.0 / (d * fro)))
