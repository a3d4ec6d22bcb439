"""YIN pitch tracking and F0 comparison metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..dsp import Waveform
from ..errors import SignalError

F_MIN = 65.0
F_MAX = 1000.0
THRESHOLD = 0.15
# frames quieter than this mean-square level are unvoiced outright
SILENCE_POWER = 1e-10


@dataclass(frozen=True)
class PitchTrack:
    f0: np.ndarray
    voiced: np.ndarray
    periodicity: np.ndarray
    hop: int
    sample_rate: int

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=np.float64)
        voiced = np.asarray(self.voiced, dtype=bool)
        per = np.asarray(self.periodicity, dtype=np.float64)
        if not (f0.shape == voiced.shape == per.shape):
            raise ValueError("f0, voiced and periodicity must have equal length")
        if np.any((f0 > 0) != voiced):
            raise ValueError("f0 must be positive exactly on voiced frames")
        if np.any((per < 0) | (per > 1)):
            raise ValueError("periodicity must lie in [0, 1]")
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "voiced", voiced)
        object.__setattr__(self, "periodicity", per)

    def __len__(self):
        return len(self.f0)


def _cmnd(frames: np.ndarray, tau_max: int) -> np.ndarray:
    """Cumulative-mean-normalised difference ``d'(tau)`` for ``tau = 0 .. tau_max``."""
    n_frames, length = frames.shape
    win = length - tau_max
    n_fft = 1 << int(np.ceil(np.log2(length + win)))
    spec_full = np.fft.rfft(frames, n_fft)
    spec_head = np.fft.rfft(frames[:, :win], n_fft)
    # r(tau) = sum_{j<win} x_j x_{j+tau}
    corr = np.fft.irfft(spec_full * np.conj(spec_head), n_fft)[:, : tau_max + 1]
    csum = np.concatenate([np.zeros((n_frames, 1)), np.cumsum(frames ** 2, axis=1)], axis=1)
    e0 = csum[:, win][:, None]
    taus = np.arange(tau_max + 1)
    e_tau = csum[:, taus + win] - csum[:, taus]
    diff = np.maximum(e0 + e_tau - 2.0 * corr, 0.0)
    diff[:, 0] = 0.0
    running = np.cumsum(diff[:, 1:], axis=1)
    cmnd = np.ones_like(diff)
    with np.errstate(divide="ignore", invalid="ignore"):
        cmnd[:, 1:] = np.where(running > 0, diff[:, 1:] * taus[1:] / running, 1.0)
    return cmnd


def track_pitch(w: Waveform, hop: int = 256, f_min: float = F_MIN, f_max: float = F_MAX,
                threshold: float = THRESHOLD, frame_length: int = 1024) -> PitchTrack:
    """YIN F0 track with one frame per ``hop`` samples (``1 + len(w) // hop`` frames).

    Each frame analyses ``frame_length`` samples around its centre; windows
    that would cross the signal edges are shifted inwards. Periodicity is
    ``1 - d'(tau*)`` at the selected lag.
    """
    sr = w.sample_rate
    tau_min = max(2, int(np.floor(sr / f_max)))
    tau_max = int(np.ceil(sr / f_min))
    if len(w) < 4 * sr / f_min:
        raise SignalError(
            f"need at least 4 periods at f_min ({int(np.ceil(4 * sr / f_min))} samples), got {len(w)}"
        )
    frame_length = max(frame_length, 2 * tau_max + 2)
    x = w.samples
    if len(x) < frame_length:
        x = np.pad(x, (0, frame_length - len(x)))
    n_frames = 1 + len(w) // hop
    starts = np.clip(np.arange(n_frames) * hop - frame_length // 2, 0, len(x) - frame_length)
    frames = sliding_window_view(x, frame_length)[starts]
    cmnd = _cmnd(frames, tau_max)

    search = cmnd[:, tau_min: tau_max + 1]
    below = search < threshold
    has_dip = below.any(axis=1)
    first = np.argmax(below, axis=1)
    best = np.empty(n_frames, dtype=int)
    for t in range(n_frames):
        if has_dip[t]:
            k = first[t]
            # walk down to the bottom of the first dip
            while k + 1 < search.shape[1] and search[t, k + 1] < search[t, k]:
                k += 1
            best[t] = k
        else:
            best[t] = int(np.argmin(search[t]))
    tau = best + tau_min
    rows = np.arange(n_frames)
    d_best = cmnd[rows, tau]

    # parabolic refinement on d'
    left = cmnd[rows, np.maximum(tau - 1, 1)]
    right = cmnd[rows, np.minimum(tau + 1, tau_max)]
    denom = left - 2.0 * d_best + right
    with np.errstate(divide="ignore", invalid="ignore"):
        shift = np.where(np.abs(denom) > 1e-12, 0.5 * (left - right) / denom, 0.0)
    shift = np.clip(shift, -1.0, 1.0)
    interior = (tau > 1) & (tau < tau_max)
    tau_f = tau + np.where(interior, shift, 0.0)

    power = np.mean(frames ** 2, axis=1)
    audible = power > SILENCE_POWER
    voiced = has_dip & audible
    f0 = np.where(voiced, sr / tau_f, 0.0)
    periodicity = np.where(audible, np.clip(1.0 - d_best, 0.0, 1.0), 0.0)
    return PitchTrack(f0, voiced, periodicity, hop, sr)


def f0_metrics(ref: PitchTrack, deg: PitchTrack) -> tuple[float | None, float, float]:
    """``(f0_rmse_hz, vuv_f1, periodicity_rmse)`` of ``deg`` against ``ref``.

    F0 RMSE uses frames voiced in both tracks and is ``None`` when there are
    none. Tracks of different lengths are truncated to the shorter one.
    """
    n = min(len(ref), len(deg))
    if n == 0:
        raise SignalError("empty pitch tracks")
    rv, dv = ref.voiced[:n], deg.voiced[:n]
    both = rv & dv
    f0_rmse = None
    if both.any():
        f0_rmse = float(np.sqrt(np.mean((ref.f0[:n][both] - deg.f0[:n][both]) ** 2)))
    tp = int(np.sum(both))
    fp = int(np.sum(dv & ~rv))
    fn = int(np.sum(rv & ~dv))
    # no voiced frames anywhere counts as perfect agreement
    vuv_f1 = 1.0 if tp + fp + fn == 0 else 2.0 * tp / (2.0 * tp + fp + fn)
    per_err = float(np.sqrt(np.mean((ref.periodicity[:n] - deg.periodicity[:n]) ** 2)))
    return f0_rmse, float(vuv_f1), per_err
