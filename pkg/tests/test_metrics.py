import time

import numpy as np
import pytest

from freev.dsp import Waveform
from freev.errors import SignalError
from freev.fixtures import FixtureKind, FixtureSpec, make_fixture
from freev.metrics.pitch import PitchTrack, f0_metrics, track_pitch
from freev.metrics.rtf import rtf
from freev.metrics.spectral import MCD_CONST, las_rmse, mcd, mcd_from_cepstra
from freev.metrics.stoi import stoi, third_octave_bands
from freev.metrics.suite import MetricReport, aggregate, evaluate_pair, format_table

SR = 22050


def add_noise(w, snr_db, seed=0):
    n = np.random.default_rng(seed).standard_normal(len(w))
    n *= np.std(w.samples) / np.std(n) * 10 ** (-snr_db / 20)
    return Waveform(w.samples + n, w.sample_rate)


def track(f0, voiced, per=None):
    f0 = np.asarray(f0, dtype=float)
    per = np.zeros(len(f0)) if per is None else np.asarray(per, dtype=float)
    return PitchTrack(f0, np.asarray(voiced, bool), per, 256, SR)


class TestMcd:
    def test_constant(self):
        np.testing.assert_allclose(MCD_CONST, 6.141851463713754, rtol=1e-12)

    def test_unit_cepstral_difference(self):
        a = np.zeros((2, 14))
        b = a.copy()
        b[:, 3] = 1.0
        np.testing.assert_allclose(mcd_from_cepstra(a, b), 6.1418514637, rtol=1e-9)

    def test_c0_ignored(self):
        a = np.zeros((2, 14))
        b = a.copy()
        b[:, 0] = 5.0
        assert mcd_from_cepstra(a, b) == 0

    def test_reflexive_and_gain(self, fb, voice):
        assert mcd(voice, voice, fb) == 0
        half = Waveform(0.5 * voice.samples, SR)
        assert mcd(voice, half, fb) < 1e-6

    def test_empty_overlap(self, fb):
        with pytest.raises(SignalError):
            mcd(Waveform(np.zeros(0), SR), Waveform(np.zeros(10), SR), fb)

    def test_rate_mismatch(self, fb, voice):
        with pytest.raises(SignalError):
            mcd(voice, Waveform(voice.samples, 16000), fb)


class TestLasRmse:
    def test_reflexive(self, voice):
        assert las_rmse(voice, voice) == 0

    def test_gain_offset(self, voice):
        # a gain of 2 is a log offset of ln 2 on every cell above the floor
        np.testing.assert_allclose(las_rmse(voice, Waveform(2 * voice.samples, SR)),
                                   np.log(2), atol=1e-3)

    def test_independent_recomputation(self, voice, rng):
        deg = add_noise(voice, 10)
        win = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(1024) / 1024)

        def mag(x):
            x = np.pad(x, 512, mode="reflect")
            idx = np.arange(0, len(x) - 1023, 256)[:, None] + np.arange(1024)
            return np.abs(np.fft.rfft(x[idx] * win, axis=1))

        a, b = mag(voice.samples), mag(deg.samples)
        expected = np.sqrt(np.mean((np.log(np.maximum(b, 1e-5)) - np.log(np.maximum(a, 1e-5))) ** 2))
        np.testing.assert_allclose(las_rmse(voice, deg), expected, rtol=1e-10)


class TestPitch:
    def test_sine_220(self):
        w = make_fixture(FixtureSpec(FixtureKind.SINE, 1.0, f0=220.0))
        tr = track_pitch(w)
        assert tr.voiced.all()
        assert abs(np.median(tr.f0) - 220.0) < 2.0

    def test_noise_mostly_unvoiced(self):
        tr = track_pitch(make_fixture(FixtureSpec(FixtureKind.NOISE, 1.0, seed=1)))
        assert tr.voiced.mean() < 0.2

    def test_silence(self):
        tr = track_pitch(Waveform(np.zeros(SR), SR))
        assert not tr.voiced.any() and not tr.f0.any()

    def test_octave(self):
        base = track_pitch(make_fixture(FixtureSpec(FixtureKind.SINE, 1.0, f0=150.0)))
        double = track_pitch(make_fixture(FixtureSpec(FixtureKind.SINE, 1.0, f0=300.0)))
        ratio = np.median(double.f0[double.voiced]) / np.median(base.f0[base.voiced])
        assert abs(ratio - 2.0) < 0.06

    def test_frame_count_and_ranges(self, voice):
        tr = track_pitch(voice)
        assert len(tr) == 1 + len(voice) // 256
        assert np.all((tr.periodicity >= 0) & (tr.periodicity <= 1))

    def test_too_short(self):
        with pytest.raises(SignalError):
            track_pitch(Waveform(np.zeros(100), SR))

    def test_track_invariants(self):
        with pytest.raises(ValueError):
            track([100.0, 0.0], [False, False])
        with pytest.raises(ValueError):
            track([0.0], [False], per=[1.5])


class TestF0Metrics:
    def test_identical(self):
        t = track([100, 0, 120], [1, 0, 1], [0.9, 0.1, 0.8])
        assert f0_metrics(t, t) == (0.0, 1.0, 0.0)

    def test_f1_two_thirds(self):
        ref = track([100, 100, 0, 0], [1, 1, 0, 0])
        deg = track([100] * 4, [1] * 4)
        np.testing.assert_allclose(f0_metrics(ref, deg)[1], 2 / 3)

    def test_offset(self):
        ref = track([100, 200, 0], [1, 1, 0])
        deg = track([110, 210, 0], [1, 1, 0])
        np.testing.assert_allclose(f0_metrics(ref, deg)[0], 10.0)

    def test_no_common_voicing(self):
        ref = track([100, 0], [1, 0])
        deg = track([0, 100], [0, 1])
        f0_rmse, f1, _ = f0_metrics(ref, deg)
        assert f0_rmse is None and f1 == 0


class TestStoi:
    def test_reflexive(self, voice):
        np.testing.assert_allclose(stoi(voice, voice), 1.0, atol=1e-6)

    def test_noise_reference(self, voice):
        # the clipping step lets the reference envelope leak into the score,
        # so unrelated noise lands near 0.4 on these strongly modulated fixtures
        noise = make_fixture(FixtureSpec(FixtureKind.NOISE, 2.0, seed=9))
        score = stoi(voice, noise)
        assert score < 0.45
        assert score < stoi(voice, add_noise(voice, 0)) - 0.3

    def test_high_snr(self, voice):
        assert stoi(voice, add_noise(voice, 20)) > 0.9

    def test_monotone_in_noise(self, voice):
        scores = [stoi(voice, add_noise(voice, snr)) for snr in (30, 20, 10, 0, -10)]
        assert all(0 <= s <= 1 for s in scores)
        assert all(a >= b for a, b in zip(scores, scores[1:]))

    def test_band_matrix(self):
        obm = third_octave_bands()
        assert obm.shape == (15, 257)
        assert np.all(obm.sum(axis=0) <= 1)

    def test_matches_pystoi(self, voice):
        pystoi = pytest.importorskip("pystoi")
        from scipy.signal import resample_poly
        x = resample_poly(voice.samples, 200, 441)
        for snr in (20, 0):
            y = add_noise(Waveform(x, 10000), snr)
            ours = stoi(Waveform(x, 10000), y)
            np.testing.assert_allclose(ours, pystoi.stoi(x, y.samples, 10000), atol=1e-10)

    def test_too_short(self):
        w = Waveform(np.random.default_rng(0).standard_normal(2000), SR)
        with pytest.raises(SignalError):
            stoi(w, w)


class TestRtf:
    def test_sleep_stub(self):
        value = rtf(lambda: time.sleep(0.05), audio_seconds=0.1, repeats=5)
        assert 0.45 < value < 0.65

    def test_waveform_duration_used(self):
        w = Waveform(np.zeros(SR), SR)
        value = rtf(lambda: (time.sleep(0.01), w)[1], repeats=5)
        assert 0.005 < value < 0.05

    def test_stable(self):
        run = lambda: time.sleep(0.02)
        a = rtf(run, audio_seconds=1.0)
        b = rtf(run, audio_seconds=1.0)
        assert 0.8 <= a / b <= 1.25

    def test_zero_audio(self):
        with pytest.raises(SignalError):
            rtf(lambda: Waveform(np.zeros(0), SR))

    def test_too_few_repeats(self):
        with pytest.raises(ValueError):
            rtf(lambda: 1.0, repeats=3)


class TestSuite:
    def test_self_pair(self, fb, voice):
        r = evaluate_pair(voice, voice, fb)
        assert r.mcd == 0 and r.las_rmse == 0 and r.vuv_f1 == 1 and r.periodicity_err == 0
        np.testing.assert_allclose(r.stoi, 1.0, atol=1e-6)

    def test_aggregate_and_table(self):
        a = MetricReport(1.0, 0.5, 0.9, 0.1, 10.0, 0.8)
        b = MetricReport(3.0, 1.5, 0.7, 0.3, None, 0.6)
        s = aggregate([a, b])
        np.testing.assert_allclose([s["mcd"], s["f0_rmse"], s["stoi"]], [2.0, 10.0, 0.7])
        text = format_table(s)
        assert text.splitlines()[0].split(" | ")[0].strip() == "MCD"
        assert "Hz" in text

    def test_report_validation(self):
        with pytest.raises(ValueError):
            MetricReport(np.nan, 0, 1, 0, None, 1)
        with pytest.raises(ValueError):
            MetricReport(0, 0, 1.2, 0, None, 1)
        with pytest.raises(ValueError):
            aggregate([])
