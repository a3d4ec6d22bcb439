"""Short-time objective intelligibility (classic, non-extended STOI)."""

from __future__ import annotations

from math import gcd

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import resample_poly

from ..dsp import Waveform
from ..errors import SignalError

FS = 10000
N_FRAME = 256
N_FFT = 512
N_BANDS = 15
MIN_FREQ = 150.0
SEGMENT = 30  # frames per 384 ms analysis segment
BETA = -15.0  # lower signal-to-distortion bound, dB
DYN_RANGE = 40.0
EPS = np.finfo(np.float64).eps


def third_octave_bands(fs: int = FS, n_fft: int = N_FFT, n_bands: int = N_BANDS,
                       min_freq: float = MIN_FREQ) -> np.ndarray:
    """Binary (n_bands, n_fft // 2 + 1) band-assignment matrix."""
    freqs = np.linspace(0, fs, n_fft + 1)[: n_fft // 2 + 1]
    k = np.arange(n_bands)
    lows = min_freq * 2.0 ** ((2 * k - 1) / 6.0)
    highs = min_freq * 2.0 ** ((2 * k + 1) / 6.0)
    obm = np.zeros((n_bands, len(freqs)))
    for i in range(n_bands):
        lo = int(np.argmin((freqs - lows[i]) ** 2))
        hi = int(np.argmin((freqs - highs[i]) ** 2))
        obm[i, lo:hi] = 1.0
    return obm


def _window():
    return np.hanning(N_FRAME + 2)[1:-1]


def _frames(x, hop):
    # start positions 0 .. len - N - 1, as in the reference implementation
    if len(x) <= N_FRAME:
        return np.zeros((0, N_FRAME))
    return sliding_window_view(x, N_FRAME)[: len(x) - N_FRAME: hop]


def _overlap_add(frames, hop):
    if len(frames) == 0:
        return np.zeros(0)
    out = np.zeros((len(frames) - 1) * hop + N_FRAME)
    for i, f in enumerate(frames):
        out[i * hop: i * hop + N_FRAME] += f
    return out


def remove_silent_frames(x, y, dyn_range=DYN_RANGE, hop=N_FRAME // 2):
    """Drop frames of ``x`` more than ``dyn_range`` dB below its loudest frame (same for ``y``)."""
    win = _window()
    fx = _frames(x, hop) * win
    fy = _frames(y, hop) * win
    energies = 20.0 * np.log10(np.linalg.norm(fx, axis=1) + EPS)
    keep = energies > energies.max() - dyn_range if len(energies) else np.zeros(0, bool)
    return _overlap_add(fx[keep], hop), _overlap_add(fy[keep], hop)


def _band_envelopes(x, obm):
    frames = _frames(x, N_FRAME // 2) * _window()
    spec = np.fft.rfft(frames, N_FFT, axis=1)
    return np.sqrt(np.abs(spec) ** 2 @ obm.T).T  # (bands, frames)


def _to_10k(x, sr):
    if sr == FS:
        return x
    g = gcd(FS, sr)
    return resample_poly(x, FS // g, sr // g)


def stoi(ref: Waveform, deg: Waveform) -> float:
    """STOI of ``deg`` against the clean reference ``ref``, clipped to [0, 1].

    Signals are resampled to 10 kHz, silent frames (40 dB below the loudest
    reference frame) are removed, and clipped band-envelope correlations are
    averaged over 15 third-octave bands and all 384 ms segments.
    """
    if ref.sample_rate != deg.sample_rate:
        raise SignalError(f"sample rates differ: {ref.sample_rate} vs {deg.sample_rate}")
    n = min(len(ref), len(deg))
    x = _to_10k(ref.samples[:n], ref.sample_rate)
    y = _to_10k(deg.samples[:n], deg.sample_rate)
    x, y = remove_silent_frames(x, y)
    obm = third_octave_bands()
    x_tob = _band_envelopes(x, obm)
    y_tob = _band_envelopes(y, obm)
    if x_tob.shape[1] < SEGMENT:
        raise SignalError("STOI needs at least 384 ms of non-silent signal")

    x_seg = sliding_window_view(x_tob, SEGMENT, axis=1).transpose(1, 0, 2)
    y_seg = sliding_window_view(y_tob, SEGMENT, axis=1).transpose(1, 0, 2)
    scale = np.linalg.norm(x_seg, axis=2, keepdims=True) / (
        np.linalg.norm(y_seg, axis=2, keepdims=True) + EPS)
    y_norm = y_seg * scale
    clip = 10.0 ** (-BETA / 20.0)
    y_prime = np.minimum(y_norm, x_seg * (1.0 + clip))
    y_prime = y_prime - y_prime.mean(axis=2, keepdims=True)
    x_c = x_seg - x_seg.mean(axis=2, keepdims=True)
    y_prime /= np.linalg.norm(y_prime, axis=2, keepdims=True) + EPS
    x_c /= np.linalg.norm(x_c, axis=2, keepdims=True) + EPS
    d = float(np.sum(x_c * y_prime) / (x_c.shape[0] * x_c.shape[1]))
    return float(np.clip(d, 0.0, 1.0))
