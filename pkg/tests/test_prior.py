import json

import numpy as np
import pytest

from freev.dsp import Waveform
from freev.errors import ShapeError, SignalError
from freev.fixtures import fixture_set
from freev.melbank import MelSpectrogram
from freev.prior import (ALL_METHODS, BenchReport, PriorMethod, PriorVariant, bench_priors,
                         estimate_prior, estimate_raw, format_duration)

PI = PriorMethod(PriorVariant.PSEUDO_INVERSE)
PI_ABS = PriorMethod(PriorVariant.PSEUDO_INVERSE_ABS)
LS = PriorMethod(PriorVariant.LEAST_SQUARES)
NNLS = PriorMethod(PriorVariant.NNLS)


class TestMethods:
    def test_parse_list(self):
        assert [m.variant for m in PriorMethod.parse_list("pi, nnls")] == [
            PriorVariant.PSEUDO_INVERSE, PriorVariant.NNLS]
        with pytest.raises(ValueError):
            PriorMethod.parse_list("")
        with pytest.raises(ValueError):
            PriorMethod.parse_list("magic")
        with pytest.raises(ValueError):
            PriorMethod(PriorVariant.NNLS, nnls_max_iter=0)


class TestEstimates:
    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_floor(self, fb, rng, method):
        x = rng.exponential(1.0, (10, 80))
        assert estimate_raw(x, fb, method).min() >= 1e-5

    def test_pi_recovers_row_space(self, fb, rng):
        a = rng.uniform(0, 1, (6, 80)) @ fb.m
        est = estimate_prior(MelSpectrogram(a @ fb.m.T), fb, PI).frames
        np.testing.assert_allclose(est, np.maximum(a, 1e-5), atol=1e-6)

    def test_ls_equals_pi_before_floor(self, fb, rng):
        x = rng.exponential(1.0, (10, 80))
        np.testing.assert_allclose(estimate_raw(x, fb, LS), estimate_raw(x, fb, PI), atol=1e-10)

    def test_abs_agrees_where_positive(self, fb, rng):
        x = rng.exponential(1.0, (20, 80))
        raw = x @ fb.m_pinv.T
        pi, pia = estimate_raw(x, fb, PI), estimate_raw(x, fb, PI_ABS)
        pos = raw >= 1e-5
        np.testing.assert_array_equal(pi[pos], pia[pos])
        assert np.all(pia >= pi)

    def test_forward_residual_bound(self, fb, rng):
        x = rng.exponential(1.0, (10, 513)) @ fb.m.T
        unclamped = x @ fb.m_pinv.T
        nn = estimate_raw(x, fb, NNLS)
        r_pi = np.linalg.norm(unclamped @ fb.m.T - x)
        r_nn = np.linalg.norm(nn @ fb.m.T - x)
        assert r_pi <= r_nn + 1e-9

    def test_shape_and_domain_errors(self, fb):
        with pytest.raises(ShapeError):
            estimate_prior(MelSpectrogram(np.ones((2, 40))), fb, PI)
        with pytest.raises(ShapeError):
            estimate_prior(MelSpectrogram(np.ones((2, 80)), "log"), fb, PI)

    @pytest.mark.parametrize("method", ALL_METHODS)
    def test_silence(self, fb, method):
        est = estimate_prior(MelSpectrogram(np.zeros((4, 80))), fb, method).frames
        assert np.all(est == 1e-5)


@pytest.fixture(scope="module")
def report(fb):
    return bench_priors(fixture_set(2, duration=1.0), fb, repeats=2, warmup=1)


class TestBench:
    def test_layout(self, report):
        assert [r.method for r in report.results] == ["nnls", "ls", "pi", "pi-abs"]
        assert report.clip_count == 2 and report.threads == 1
        assert all(r.time_per_clip_s > 0 and r.las_rmse >= 0 for r in report.results)
        table = report.to_table()
        assert "PI w/ abs" in table and "LAS-RMSE" in table

    def test_json_round_trip(self, report):
        data = json.loads(report.to_json())
        again = BenchReport.from_dict(data)
        assert again.to_json() == report.to_json()

    def test_abs_helps_on_voice(self, report):
        assert report.result("pi-abs").las_rmse < report.result("pi").las_rmse

    def test_single_method(self, fb, voice):
        rep = bench_priors([voice], fb, methods=[PI], repeats=1, warmup=0)
        assert len(rep.results) == 1

    def test_silent_clip(self, fb):
        rep = bench_priors([Waveform(np.zeros(22050), 22050)], fb, repeats=1, warmup=0)
        assert all(r.las_rmse == 0 for r in rep.results)

    def test_empty(self, fb):
        with pytest.raises(SignalError):
            bench_priors([], fb)

    def test_format_duration(self):
        assert format_duration(0.29) == "290ms"
        assert format_duration(286e-6) == "286µs"
        assert format_duration(2.5) == "2.50s"
