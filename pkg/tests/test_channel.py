import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridsim.channel import (
    ChannelRealization,
    HybridConfig,
    TrialStreams,
    awgn,
    sample_channel,
    ula_response,
)
from hybridsim.errors import ConfigError


class TestUla:
    def test_broadside(self):
        assert np.allclose(ula_response(0.0, 4), np.full(4, 0.5))

    def test_endfire(self):
        assert np.allclose(ula_response(np.pi / 2, 2), np.array([1, -1]) / np.sqrt(2))

    @given(st.floats(-np.pi / 2, np.pi / 2))
    def test_unit_norm_constant_modulus(self, angle):
        a = ula_response(angle, 8)
        assert np.isclose(np.linalg.norm(a), 1.0)
        assert np.allclose(np.abs(a), 1 / np.sqrt(8))


class TestSampleChannel:
    def test_single_path_closed_form(self):
        M, N = 16, 8
        ch = ChannelRealization.from_paths(M, N, [1.0], [0.0], [0.0])
        expected = np.sqrt(M * N) * np.outer(ula_response(0, N), ula_response(0, M).conj())
        assert np.allclose(ch.H, expected)
        assert np.isclose(np.linalg.norm(ch.H), np.sqrt(M * N))
        assert np.linalg.matrix_rank(ch.H) == 1

    def test_rank_bound(self, rng):
        ch = sample_channel(16, 8, 3, rng)
        s = np.linalg.svd(ch.H, compute_uv=False)
        assert s[3] <= 1e-8 * s[0]
        assert s[0] <= np.linalg.norm(ch.H) + 1e-12
        assert ch.H.shape == (8, 16) and ch.L == 3 and len(ch.paths) == 3

    def test_mean_energy(self):
        # E ||H||_F^2 = MN with unit-norm responses and CN(0,1) gains
        gen = np.random.default_rng(2024)
        energy = [np.linalg.norm(sample_channel(16, 8, 3, gen).H) ** 2 for _ in range(10_000)]
        assert abs(np.mean(energy) / 128 - 1) < 0.03

    def test_deterministic(self):
        a = sample_channel(8, 4, 2, np.random.default_rng(5))
        b = sample_channel(8, 4, 2, np.random.default_rng(5))
        assert np.array_equal(a.H, b.H)

    def test_round_trip(self, rng):
        ch = sample_channel(16, 8, 4, rng)
        assert np.linalg.norm(ch.rebuild().H - ch.H) <= 1e-12
        back = ChannelRealization.from_json(ch.to_json())
        assert np.array_equal(back.H, ch.rebuild().H)
        assert back.digest() == ChannelRealization.from_dict(ch.to_dict()).digest()

    def test_needs_a_path(self, rng):
        with pytest.raises(ValueError):
            sample_channel(4, 4, 0, rng)


class TestAwgn:
    def test_zero_variance(self, rng):
        assert np.all(awgn(5, 0.0, rng) == 0)

    def test_variance(self):
        z = awgn(100_000, 2.0, np.random.default_rng(1))
        assert abs(np.mean(np.abs(z) ** 2) / 2.0 - 1) < 0.03
        assert abs(np.var(z.real) / 1.0 - 1) < 0.03

    def test_deterministic(self):
        assert np.array_equal(awgn(6, 1.0, np.random.default_rng(3)),
                              awgn(6, 1.0, np.random.default_rng(3)))

    def test_negative_variance(self, rng):
        with pytest.raises(ValueError):
            awgn(3, -1.0, rng)


class TestConfig:
    def test_defaults(self):
        cfg = HybridConfig.from_db(10.0, M=64, N=32, r=8, d=2, m=6)
        assert np.isclose(cfg.snr, 10.0)
        assert np.isclose(cfg.sigma_r_sq, 0.1) and cfg.sigma_t_sq == cfg.sigma_r_sq
        assert (cfg.K_t, cfg.K_r) == (8, 4)

    @pytest.mark.parametrize("kw", [
        dict(M=64, N=32, r=8, d=9, m=6),
        dict(M=64, N=32, r=7, d=2, m=6),
        dict(M=64, N=32, r=8, d=2, m=65),
        dict(M=64, N=32, r=8, d=2, m=6, snr=0.0),
        dict(M=64, N=32, r=64, d=2, m=6),
    ])
    def test_invalid(self, kw):
        with pytest.raises(ConfigError):
            HybridConfig(**kw)


class TestStreams:
    def test_purposes_independent(self):
        a = TrialStreams(7, 3)
        b = TrialStreams(7, 3)
        a("dl_noise").standard_normal(100)  # extra draws in one purpose
        assert np.array_equal(a("channel").standard_normal(4), b("channel").standard_normal(4))

    def test_trials_differ(self):
        x = TrialStreams(7, 0)("channel").standard_normal(3)
        y = TrialStreams(7, 1)("channel").standard_normal(3)
        assert not np.array_equal(x, y)

    def test_fresh_rewinds(self):
        s = TrialStreams(1, 0)
        first = s("q1").standard_normal(2)
        assert np.array_equal(s.fresh("q1").standard_normal(2), first)
