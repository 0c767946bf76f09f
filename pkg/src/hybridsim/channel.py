"""Sparse mmWave channel realizations, noise, and per-trial RNG streams."""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "HybridConfig",
    "ChannelRealization",
    "TrialStreams",
    "ula_response",
    "sample_channel",
    "awgn",
]


@dataclass
class HybridConfig:
    """System dimensions and link parameters for one hybrid MIMO link.

    ``snr`` is linear. The evaluation noise variance is ``sigma_r_sq = 1/snr``;
    the training-phase variances default to the same value.
    """

    M: int
    N: int
    r: int
    d: int
    m: int
    snr: float = 1.0
    sigma_t_sq: float | None = None
    sigma_r_sq: float | None = None
    seed: int = 0
    trials: int = 1

    def __post_init__(self):
        if not (1 <= self.d <= self.r <= min(self.M, self.N)):
            raise ConfigError(
                f"need 1 <= d <= r <= min(M, N); got d={self.d}, r={self.r}, "
                f"M={self.M}, N={self.N}"
            )
        if self.M % self.r or self.N % self.r:
            raise ConfigError(f"r={self.r} must divide M={self.M} and N={self.N}")
        if not 1 <= self.m <= self.M:
            raise ConfigError(f"Arnoldi depth m={self.m} outside [1, M={self.M}]")
        if not self.snr > 0:
            raise ConfigError(f"snr must be positive, got {self.snr}")
        if self.sigma_r_sq is None:
            self.sigma_r_sq = 1.0 / self.snr
        if self.sigma_t_sq is None:
            self.sigma_t_sq = self.sigma_r_sq
        if self.sigma_r_sq < 0 or self.sigma_t_sq < 0:
            raise ConfigError("noise variances must be nonnegative")

    @classmethod
    def from_db(cls, snr_db, **kwargs):
        return cls(snr=10.0 ** (snr_db / 10.0), **kwargs)

    @property
    def K_t(self):
        return self.M // self.r

    @property
    def K_r(self):
        return self.N // self.r


def ula_response(angle, n):
    """Half-wavelength ULA steering vector, unit norm, phase reference at element 0."""
    k = np.arange(n)
    return np.exp(1j * np.pi * k * np.sin(angle)) / np.sqrt(n)


@dataclass
class ChannelRealization:
    H: np.ndarray
    beta: np.ndarray
    aoa: np.ndarray
    aod: np.ndarray
    M: int
    N: int

    @property
    def L(self):
        return len(self.beta)

    @property
    def paths(self):
        return [
            {"beta": complex(b), "aoa": float(a), "aod": float(t)}
            for b, a, t in zip(self.beta, self.aoa, self.aod)
        ]

    @classmethod
    def from_paths(cls, M, N, beta, aoa, aod):
        beta = np.asarray(beta, dtype=complex)
        aoa = np.asarray(aoa, dtype=float)
        aod = np.asarray(aod, dtype=float)
        L = len(beta)
        H = np.zeros((N, M), dtype=complex)
        for b, a, t in zip(beta, aoa, aod):
            H += b * np.outer(ula_response(a, N), ula_response(t, M).conj())
        H *= np.sqrt(M * N / L)
        return cls(H=H, beta=beta, aoa=aoa, aod=aod, M=M, N=N)

    def rebuild(self):
        return ChannelRealization.from_paths(self.M, self.N, self.beta, self.aoa, self.aod)

    def digest(self):
        """Short stable hash of H, used to check cross-scheme fairness."""
        return hashlib.sha256(np.ascontiguousarray(self.H).tobytes()).hexdigest()[:16]

    def to_dict(self):
        return {
            "M": self.M,
            "N": self.N,
            "L": self.L,
            "paths": [
                {"beta": [p["beta"].real, p["beta"].imag], "aoa": p["aoa"], "aod": p["aod"]}
                for p in self.paths
            ],
        }

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, obj):
        paths = obj["paths"]
        return cls.from_paths(
            obj["M"],
            obj["N"],
            [complex(*p["beta"]) for p in paths],
            [p["aoa"] for p in paths],
            [p["aod"] for p in paths],
        )

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def sample_channel(M, N, L, rng):
    """Draw ``H = sqrt(MN/L) sum_i beta_i a_r(aoa_i) a_t(aod_i)^H``.

    Path gains are CN(0, 1); AoA and AoD are uniform on [-pi/2, pi/2].
    """
    if L < 1:
        raise ValueError("need at least one path")
    beta = (rng.standard_normal(L) + 1j * rng.standard_normal(L)) / np.sqrt(2.0)
    aoa = rng.uniform(-np.pi / 2, np.pi / 2, L)
    aod = rng.uniform(-np.pi / 2, np.pi / 2, L)
    return ChannelRealization.from_paths(M, N, beta, aoa, aod)


def awgn(n, variance, rng):
    """Circularly-symmetric complex Gaussian vector with per-entry ``variance``."""
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return np.sqrt(variance / 2.0) * z


# sub-stream identifiers; never renumber, stored seeds depend on them
PURPOSES = {
    "channel": 0,
    "dl_noise": 1,
    "ul_noise": 2,
    "q1": 3,
    "ms_dl_noise": 4,
    "ms_ul_noise": 5,
    "ms_q1": 6,
    "mtqr_dl_noise": 7,
    "mtqr_ul_noise": 8,
    "mtqr_init": 9,
    "decomp_target": 10,
}


@dataclass
class TrialStreams:
    """Independent per-purpose generators for one trial.

    Each purpose gets its own ``SeedSequence(seed, spawn_key=(trial, id))``,
    so extra draws for one purpose never shift another purpose's stream.
    """

    seed: int
    trial: int = 0
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, purpose):
        if purpose not in self._cache:
            ss = np.random.SeedSequence(self.seed, spawn_key=(self.trial, PURPOSES[purpose]))
            self._cache[purpose] = np.random.default_rng(ss)
        return self._cache[purpose]

    def fresh(self, purpose):
        """A new generator for ``purpose`` rewound to the start of its stream."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.trial, PURPOSES[purpose]))
        return np.random.default_rng(ss)
