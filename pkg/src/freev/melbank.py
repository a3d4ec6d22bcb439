"""Mel filterbank construction and its Moore-Penrose pseudo-inverse."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import MelConfig, MelNorm, MelScale, SpectralConfig
from .dsp import AmplitudeSpectrogram, Domain
from .errors import DomainError, ShapeError

# relative singular-value cutoff for the pseudo-inverse
PINV_RCOND = 1e-10

_SLANEY_F_SP = 200.0 / 3
_SLANEY_MIN_LOG_HZ = 1000.0
_SLANEY_MIN_LOG_MEL = _SLANEY_MIN_LOG_HZ / _SLANEY_F_SP
_SLANEY_LOGSTEP = np.log(6.4) / 27.0


def hz_to_mel(freqs, scale: MelScale = MelScale.SLANEY) -> np.ndarray:
    freqs = np.asarray(freqs, dtype=np.float64)
    if MelScale(scale) is MelScale.HTK:
        return 2595.0 * np.log10(1.0 + freqs / 700.0)
    mels = freqs / _SLANEY_F_SP
    high = freqs >= _SLANEY_MIN_LOG_HZ
    mels = np.where(
        high,
        _SLANEY_MIN_LOG_MEL
        + np.log(np.maximum(freqs, _SLANEY_MIN_LOG_HZ) / _SLANEY_MIN_LOG_HZ) / _SLANEY_LOGSTEP,
        mels,
    )
    return mels


def mel_to_hz(mels, scale: MelScale = MelScale.SLANEY) -> np.ndarray:
    mels = np.asarray(mels, dtype=np.float64)
    if MelScale(scale) is MelScale.HTK:
        return 700.0 * (10.0 ** (mels / 2595.0) - 1.0)
    return np.where(
        mels >= _SLANEY_MIN_LOG_MEL,
        _SLANEY_MIN_LOG_HZ * np.exp(_SLANEY_LOGSTEP * (mels - _SLANEY_MIN_LOG_MEL)),
        _SLANEY_F_SP * mels,
    )


def pseudo_inverse(m: np.ndarray, rcond: float = PINV_RCOND) -> np.ndarray:
    """Moore-Penrose pseudo-inverse through a thin SVD.

    Singular values below ``rcond * sigma_max`` are treated as zero.
    """
    u, s, vt = np.linalg.svd(m, full_matrices=False)
    keep = s > rcond * s.max() if s.size else s.astype(bool)
    s_inv = np.zeros_like(s)
    s_inv[keep] = 1.0 / s[keep]
    return (vt.T * s_inv) @ u.T


@dataclass(frozen=True, eq=False)
class MelFilterbank:
    """Filter matrix ``m`` (n_mels x n_freq) with its cached pseudo-inverse.

    ``m_pinv_t`` holds ``m_pinv.T`` in C order so that frame-major products
    ``X @ m_pinv.T`` hit a contiguous operand.
    """

    m: np.ndarray
    m_pinv: np.ndarray
    mel_config: MelConfig
    spectral_config: SpectralConfig

    def __post_init__(self):
        self.m.setflags(write=False)
        self.m_pinv.setflags(write=False)
        object.__setattr__(self, "m_pinv_t", np.ascontiguousarray(self.m_pinv.T))
        object.__setattr__(self, "m_t", np.ascontiguousarray(self.m.T))
        self.m_pinv_t.setflags(write=False)
        self.m_t.setflags(write=False)

    @classmethod
    def from_matrix(cls, m, spectral_config: SpectralConfig | None = None,
                    mel_config: MelConfig | None = None) -> "MelFilterbank":
        """Wrap an arbitrary non-negative filter matrix (used for test stubs)."""
        m = np.array(m, dtype=np.float64)
        if m.ndim != 2:
            raise ShapeError("filter matrix must be 2-D")
        if np.any(m < 0):
            raise ValueError("filter matrix must be non-negative")
        sc = spectral_config or SpectralConfig(
            sample_rate=22050, n_fft=2 * (m.shape[1] - 1) or 2, hop=1, win_length=1
        )
        mc = mel_config or MelConfig(n_mels=m.shape[0])
        return cls(m, pseudo_inverse(m), mc, sc)

    @property
    def n_mels(self) -> int:
        return self.m.shape[0]

    @property
    def n_freq(self) -> int:
        return self.m.shape[1]

    def penrose_residuals(self) -> dict[str, float]:
        """Relative Frobenius residuals of the four Penrose conditions."""
        m, p = self.m, self.m_pinv
        mp, pm = m @ p, p @ m

        def rel(a, b):
            return float(np.linalg.norm(a - b) / np.linalg.norm(b))

        return {
            "m_p_m": rel(mp @ m, m),
            "p_m_p": rel(pm @ p, p),
            "mp_sym": rel(mp.T, mp),
            "pm_sym": rel(pm.T, pm),
        }


def mel_filters(sc: SpectralConfig, mc: MelConfig) -> np.ndarray:
    """Triangular filters on the mel scale, shape (n_mels, n_freq)."""
    f_max = mc.resolved_f_max(sc.sample_rate)
    fft_freqs = np.linspace(0.0, sc.sample_rate / 2.0, sc.n_freq)
    mel_pts = np.linspace(hz_to_mel(mc.f_min, mc.mel_scale), hz_to_mel(f_max, mc.mel_scale),
                          mc.n_mels + 2)
    hz_pts = mel_to_hz(mel_pts, mc.mel_scale)
    widths = np.diff(hz_pts)
    ramps = hz_pts[:, None] - fft_freqs[None, :]
    lower = -ramps[:-2] / widths[:-1, None]
    upper = ramps[2:] / widths[1:, None]
    weights = np.maximum(0.0, np.minimum(lower, upper))
    if mc.norm is MelNorm.SLANEY:
        weights *= (2.0 / (hz_pts[2:] - hz_pts[:-2]))[:, None]
    return weights


def build_filterbank(sc: SpectralConfig | None = None,
                     mc: MelConfig | None = None) -> MelFilterbank:
    sc = sc or SpectralConfig()
    mc = mc or MelConfig()
    m = mel_filters(sc, mc)
    empty = np.flatnonzero(m.max(axis=1) <= 0)
    if empty.size:
        raise ShapeError(
            f"mel filters {empty.tolist()} have no support; lower n_mels or raise n_fft"
        )
    return MelFilterbank(m, pseudo_inverse(m), mc, sc)


@dataclass(frozen=True)
class MelSpectrogram:
    frames: np.ndarray
    domain: Domain = Domain.LINEAR

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2:
            raise ShapeError(f"mel spectrogram must be 2-D (T, n_mels), got {frames.shape}")
        domain = Domain(self.domain)
        if domain is Domain.LINEAR and np.any(frames < 0):
            raise DomainError("linear mel spectrogram has negative entries")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "domain", domain)

    @property
    def n_mels(self) -> int:
        return self.frames.shape[1]


def apply_mel(a: AmplitudeSpectrogram, fb: MelFilterbank) -> MelSpectrogram:
    """Project a linear amplitude spectrogram onto the mel bands: ``X = A M^T``."""
    if a.domain is not Domain.LINEAR:
        raise DomainError("apply_mel needs a linear-domain amplitude spectrogram")
    if a.frames.shape[1] != fb.n_freq:
        raise ShapeError(f"amplitude has {a.frames.shape[1]} bins, filterbank {fb.n_freq}")
    return MelSpectrogram(a.frames @ fb.m_t, Domain.LINEAR)
