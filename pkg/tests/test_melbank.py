import numpy as np
import pytest

from freev.config import MelConfig, MelNorm, MelScale, SpectralConfig, load_config
from freev.dsp import AmplitudeSpectrogram, Domain
from freev.errors import ConfigError, DomainError, ShapeError
from freev.melbank import (MelFilterbank, MelSpectrogram, apply_mel, build_filterbank,
                           hz_to_mel, mel_to_hz, pseudo_inverse)


class TestScales:
    @pytest.mark.parametrize("scale", list(MelScale))
    def test_round_trip(self, scale):
        f = np.linspace(0, 11025, 101)
        np.testing.assert_allclose(mel_to_hz(hz_to_mel(f, scale), scale), f, atol=1e-9)

    def test_htk_reference_point(self):
        # 1000 Hz maps to ~1000 mel on the HTK scale
        np.testing.assert_allclose(hz_to_mel(1000.0, MelScale.HTK), 999.9855, atol=1e-3)

    def test_slaney_linear_region(self):
        np.testing.assert_allclose(hz_to_mel(600.0, MelScale.SLANEY), 9.0)


class TestFilterbank:
    def test_shape_and_nonnegativity(self, fb):
        assert fb.m.shape == (80, 513)
        assert fb.m_pinv.shape == (513, 80)
        assert np.all(fb.m >= 0)
        assert np.all(fb.m.max(axis=1) > 0)
        # the pseudo-inverse has negative entries
        assert fb.m_pinv.min() < 0

    @pytest.mark.parametrize("scale", list(MelScale))
    @pytest.mark.parametrize("norm", list(MelNorm))
    def test_matches_librosa(self, scale, norm):
        librosa = pytest.importorskip("librosa")
        fb = build_filterbank(SpectralConfig(), MelConfig(mel_scale=scale, norm=norm))
        ref = librosa.filters.mel(sr=22050, n_fft=1024, n_mels=80, fmin=0, fmax=11025,
                                  htk=scale is MelScale.HTK,
                                  norm="slaney" if norm is MelNorm.SLANEY else None)
        np.testing.assert_allclose(fb.m, ref, rtol=1e-5, atol=1e-7)

    def test_f_max_clamped_to_nyquist(self):
        assert MelConfig().resolved_f_max(22050) == 11025
        assert MelConfig(f_max=16000).resolved_f_max(22050) == 11025
        assert MelConfig().resolved_f_max(44100) == 16000

    def test_invalid_configs(self):
        with pytest.raises(ConfigError):
            MelConfig(n_mels=0)
        with pytest.raises(ConfigError):
            MelConfig(f_min=12000).resolved_f_max(22050)

    def test_empty_filter_rejected(self):
        with pytest.raises(ShapeError):
            build_filterbank(SpectralConfig(n_fft=64, hop=16, win_length=64), MelConfig(n_mels=80))

    @pytest.mark.parametrize("scale", list(MelScale))
    def test_penrose(self, scale):
        fb = build_filterbank(SpectralConfig(), MelConfig(mel_scale=scale))
        res = fb.penrose_residuals()
        assert max(res.values()) < 1e-6, res

    def test_pinv_matches_numpy(self, fb):
        np.testing.assert_allclose(fb.m_pinv, np.linalg.pinv(fb.m), atol=1e-8)

    def test_identity_stub(self):
        fb = MelFilterbank.from_matrix(np.eye(5))
        np.testing.assert_allclose(fb.m_pinv, np.eye(5), atol=1e-15)

    def test_column_support(self, fb):
        # bins strictly between f_min and f_max all feed at least one filter
        freqs = np.linspace(0, 11025, 513)
        inside = (freqs > 0) & (freqs < 11025)
        assert np.all(fb.m[:, inside].sum(axis=0) > 0)

    def test_deterministic(self):
        a, b = build_filterbank(), build_filterbank()
        assert a.m.tobytes() == b.m.tobytes()
        assert a.m_pinv.tobytes() == b.m_pinv.tobytes()

    def test_rank_deficient_pinv(self):
        m = np.array([[1.0, 1.0], [2.0, 2.0]])
        np.testing.assert_allclose(pseudo_inverse(m), np.linalg.pinv(m), atol=1e-14)


class TestApplyMel:
    def test_zero(self, fb, cfg):
        a = AmplitudeSpectrogram(np.zeros((3, 513)), Domain.LINEAR, cfg)
        assert not np.any(apply_mel(a, fb).frames)

    def test_ones_gives_row_sums(self, fb, cfg):
        a = AmplitudeSpectrogram(np.ones((1, 513)), Domain.LINEAR, cfg)
        np.testing.assert_allclose(apply_mel(a, fb).frames[0], fb.m.sum(axis=1), rtol=1e-12)

    def test_linearity(self, fb, cfg, rng):
        a1, a2 = rng.uniform(0, 1, (2, 4, 513))
        f = lambda a: apply_mel(AmplitudeSpectrogram(a, Domain.LINEAR, cfg), fb).frames
        np.testing.assert_allclose(f(2.0 * a1 + 0.5 * a2), 2.0 * f(a1) + 0.5 * f(a2), atol=1e-10)

    def test_nonnegative(self, fb, cfg, rng):
        a = AmplitudeSpectrogram(rng.uniform(0, 5, (8, 513)), Domain.LINEAR, cfg)
        assert np.all(apply_mel(a, fb).frames >= 0)

    def test_errors(self, fb, cfg):
        with pytest.raises(DomainError):
            apply_mel(AmplitudeSpectrogram(np.zeros((1, 513)), Domain.LOG, cfg), fb)
        small = SpectralConfig(n_fft=512, hop=128, win_length=512)
        with pytest.raises(ShapeError):
            apply_mel(AmplitudeSpectrogram(np.zeros((1, 257)), Domain.LINEAR, small), fb)
        with pytest.raises(DomainError):
            MelSpectrogram(-np.ones((1, 80)))


class TestLoadConfig:
    def test_defaults(self):
        c = load_config(None)
        assert c.spectral.n_fft == 1024 and c.mel.n_mels == 80
        assert (c.loss.lambda_a, c.loss.lambda_p, c.loss.lambda_s, c.loss.lambda_w) == (45, 100, 20, 45)

    def test_overrides(self, tmp_path):
        p = tmp_path / "c.toml"
        p.write_text('[spectral]\nn_fft = 512\nwin_length = 512\nhop = 128\n'
                     '[mel]\nmel_scale = "htk"\n[loss]\nlambda_a = 1.0\n')
        c = load_config(p)
        assert c.spectral.n_freq == 257
        assert c.mel.mel_scale is MelScale.HTK
        assert c.loss.lambda_a == 1.0

    @pytest.mark.parametrize("text", ['[spectral]\nbogus = 1\n', '[other]\nx = 1\n',
                                      '[spectral]\nhop = 0\n', 'not toml ['])
    def test_rejects(self, tmp_path, text):
        p = tmp_path / "c.toml"
        p.write_text(text)
        with pytest.raises(ConfigError):
            load_config(p)
