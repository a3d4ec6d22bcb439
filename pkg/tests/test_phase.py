import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from freev.dsp import AmplitudeSpectrogram, Domain, amplitude, istft, recombine
from freev.errors import DomainError, ShapeError
from freev.fixtures import FixtureKind, FixtureSpec, make_fixture
from freev.phase import (PhaseComponents, anti_wrap, consistency_residual, griffin_lim,
                         parallel_phase, parallel_phase_raw)

finite = st.floats(-1e6, 1e6, allow_nan=False)


class TestParallelPhase:
    def test_examples(self):
        assert parallel_phase_raw(1.0, 0.0) == 0.0
        np.testing.assert_allclose(parallel_phase_raw(-1.0, 1.0), 3 * np.pi / 4, atol=1e-15)

    def test_axis_cases(self):
        r = np.array([1.0, -1.0, 0.0, 0.0, 0.0, -1.0, -2.0])
        i = np.array([0.0, 0.0, 1.0, -1.0, 0.0, -0.0, 1e-300])
        got = parallel_phase_raw(r, i)
        np.testing.assert_allclose(got, [0.0, np.pi, np.pi / 2, -np.pi / 2, 0.0, np.pi,
                                         np.arctan2(1e-300, -2.0)], atol=1e-15)

    def test_matches_atan2_dense(self, rng):
        r = rng.standard_normal(10 ** 6) * 10 ** rng.uniform(-3, 3, 10 ** 6)
        i = rng.standard_normal(10 ** 6) * 10 ** rng.uniform(-3, 3, 10 ** 6)
        oracle = np.arctan2(i, r)
        assert np.max(np.abs(parallel_phase_raw(r, i) - oracle)) < 1e-9

    @given(finite, finite)
    def test_range_and_equivalence(self, r, i):
        p = float(parallel_phase_raw(r, i))
        assert -np.pi < p <= np.pi
        if r != 0 or i != 0:
            expected = np.arctan2(i, r)
            if expected == -np.pi:
                expected = np.pi
            assert abs(p - expected) < 1e-9

    def test_components_validation(self, cfg):
        with pytest.raises(ShapeError):
            PhaseComponents(np.zeros((2, 3)), np.zeros((2, 4)))
        with pytest.raises(ValueError):
            PhaseComponents(np.array([np.inf]), np.array([0.0]))
        pc = PhaseComponents(np.ones((2, 513)), np.zeros((2, 513)))
        assert parallel_phase(pc, cfg).frames.shape == (2, 513)


class TestAntiWrap:
    def test_examples(self):
        np.testing.assert_allclose(anti_wrap(2 * np.pi), 0.0, atol=1e-15)
        np.testing.assert_allclose(anti_wrap(np.pi), np.pi)
        np.testing.assert_allclose(anti_wrap(-np.pi), np.pi)
        np.testing.assert_allclose(anti_wrap(3.5 * np.pi), 0.5 * np.pi, atol=1e-12)

    @given(st.floats(-100, 100), st.integers(-50, 50))
    def test_periodic_and_even(self, x, k):
        np.testing.assert_allclose(anti_wrap(x + 2 * np.pi * k), anti_wrap(x), atol=1e-12)
        np.testing.assert_allclose(anti_wrap(-x), anti_wrap(x), atol=1e-12)
        assert 0 <= anti_wrap(x) <= np.pi


class TestGriffinLim:
    def test_zero_iterations(self, cfg, voice):
        p = griffin_lim(amplitude(voice, cfg), iters=0)
        assert not np.any(p.frames)

    def test_residual_non_increasing(self, cfg, voice):
        a = amplitude(voice, cfg)
        residuals = []
        griffin_lim(a, iters=12, callback=lambda k, s: residuals.append(consistency_residual(s)))
        assert np.all(np.diff(residuals) <= 1e-9 * residuals[0])

    def test_sine_reconstruction(self, cfg):
        # 20 bins = 430.66 Hz puts exactly 5 periods in one hop; zero-phase
        # initialisation stalls on tones that do not fit the hop grid
        f0 = 20 * cfg.sample_rate / cfg.n_fft
        w = make_fixture(FixtureSpec(FixtureKind.SINE, 1.0, f0=f0))
        a = amplitude(w, cfg)
        y = istft(recombine(a, griffin_lim(a, iters=32))).samples
        x = w.samples
        seg = slice(6000, 12000)
        corr = np.correlate(y[seg], x[5000:13000], mode="valid")
        best = corr.max() / (np.linalg.norm(y[seg]) * np.linalg.norm(x[seg]))
        assert best > 0.9

    def test_errors(self, cfg):
        a = AmplitudeSpectrogram(np.zeros((3, 513)), Domain.LOG, cfg)
        with pytest.raises(DomainError):
            griffin_lim(a)
        with pytest.raises(ValueError):
            griffin_lim(AmplitudeSpectrogram(np.zeros((3, 513)), Domain.LINEAR, cfg), iters=-1)
