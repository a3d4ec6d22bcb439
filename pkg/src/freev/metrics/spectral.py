"""Spectral distances: LAS-RMSE and mel-cepstral distortion."""

from __future__ import annotations

import numpy as np
from scipy.fft import dct

from ..config import AMP_FLOOR, SpectralConfig
from ..dsp import Waveform, amplitude, log_compress
from ..errors import SignalError
from ..melbank import MelFilterbank, build_filterbank

# 10 * sqrt(2) / ln(10)
MCD_CONST = 10.0 * np.sqrt(2.0) / np.log(10.0)
N_CEPSTRA = 13
# guards log(0) only; a floor near audible levels would break gain invariance
MCD_FLOOR = 1e-10


def log_spectral_rmse(est, ref, floor: float = AMP_FLOOR) -> float:
    """RMS difference of natural-log amplitudes over every (frame, bin) cell.

    Both inputs are linear amplitudes and are floored at ``floor`` first.
    """
    est = np.asarray(est, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if est.shape != ref.shape:
        raise ValueError(f"shape mismatch: {est.shape} vs {ref.shape}")
    diff = log_compress(est, floor) - log_compress(ref, floor)
    return float(np.sqrt(np.mean(diff * diff)))


def _aligned(ref: Waveform, deg: Waveform):
    if ref.sample_rate != deg.sample_rate:
        raise SignalError(f"sample rates differ: {ref.sample_rate} vs {deg.sample_rate}")
    n = min(len(ref), len(deg))
    if n == 0:
        raise SignalError("no overlapping samples to compare")
    return ref.samples[:n], deg.samples[:n]


def las_rmse(ref: Waveform, deg: Waveform, cfg: SpectralConfig | None = None) -> float:
    """LAS-RMSE between two time-aligned waveforms (truncated to the shorter)."""
    cfg = cfg or SpectralConfig(sample_rate=ref.sample_rate)
    r, d = _aligned(ref, deg)
    a_ref = amplitude(Waveform(r, ref.sample_rate), cfg).frames
    a_deg = amplitude(Waveform(d, deg.sample_rate), cfg).frames
    return log_spectral_rmse(a_deg, a_ref)


def mel_cepstrum(w: Waveform, fb: MelFilterbank, n_cepstra: int = N_CEPSTRA,
                 floor: float = MCD_FLOOR) -> np.ndarray:
    """Cepstra ``c_0 .. c_{n_cepstra}`` per frame from the orthonormal DCT of log-mel."""
    a = amplitude(w, fb.spectral_config).frames
    logmel = log_compress(a @ fb.m_t, floor)
    return dct(logmel, type=2, norm="ortho", axis=-1)[:, : n_cepstra + 1]


def mcd_from_cepstra(c_ref, c_deg) -> float:
    """Mean frame-wise MCD in dB; column 0 (energy) is ignored."""
    c_ref = np.asarray(c_ref, dtype=np.float64)
    c_deg = np.asarray(c_deg, dtype=np.float64)
    diff = c_ref[:, 1:] - c_deg[:, 1:]
    return float(MCD_CONST * np.mean(np.sqrt(np.sum(diff * diff, axis=-1))))


def mcd(ref: Waveform, deg: Waveform, fb: MelFilterbank | None = None) -> float:
    """Mel-cepstral distortion (dB) over cepstral coefficients 1..13.

    Pairs are assumed time aligned; the longer signal is truncated.
    """
    r, d = _aligned(ref, deg)
    if fb is None:
        fb = build_filterbank(SpectralConfig(sample_rate=ref.sample_rate))
    c_ref = mel_cepstrum(Waveform(r, ref.sample_rate), fb)
    c_deg = mel_cepstrum(Waveform(d, deg.sample_rate), fb)
    return mcd_from_cepstra(c_ref, c_deg)
