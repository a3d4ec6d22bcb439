"""Framing, STFT/ISTFT and polar conversions.

All spectrograms are frame-major: ``frames`` has shape ``(T, n_freq)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .config import AMP_FLOOR, SpectralConfig
from .errors import ConfigError, DomainError, ShapeError, SignalError

COLA_TOL = 1e-10
# floor on the overlap-added squared window before dividing by it
OLA_FLOOR = 1e-11


class Domain(str, enum.Enum):
    LINEAR = "linear"
    LOG = "log"


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise SignalError(f"waveform must be mono (1-D), got shape {samples.shape}")
        if self.sample_rate <= 0:
            raise SignalError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise SignalError("waveform contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class ComplexSpectrogram:
    frames: np.ndarray
    config: SpectralConfig

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.complex128)
        if frames.ndim != 2 or frames.shape[1] != self.config.n_freq:
            raise ShapeError(f"expected (T, {self.config.n_freq}) frames, got {frames.shape}")
        object.__setattr__(self, "frames", frames)


@dataclass(frozen=True)
class AmplitudeSpectrogram:
    frames: np.ndarray
    domain: Domain
    config: SpectralConfig

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != self.config.n_freq:
            raise ShapeError(f"expected (T, {self.config.n_freq}) frames, got {frames.shape}")
        domain = Domain(self.domain)
        if domain is Domain.LINEAR and np.any(frames < 0):
            raise DomainError("linear amplitude spectrogram has negative entries")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "domain", domain)

    def to_log(self) -> "AmplitudeSpectrogram":
        if self.domain is Domain.LOG:
            return self
        return AmplitudeSpectrogram(log_compress(self.frames), Domain.LOG, self.config)

    def to_linear(self) -> "AmplitudeSpectrogram":
        if self.domain is Domain.LINEAR:
            return self
        return AmplitudeSpectrogram(log_expand(self.frames), Domain.LINEAR, self.config)


@dataclass(frozen=True)
class PhaseSpectrogram:
    frames: np.ndarray
    config: SpectralConfig

    def __post_init__(self):
        frames = np.asarray(self.frames, dtype=np.float64)
        if frames.ndim != 2 or frames.shape[1] != self.config.n_freq:
            raise ShapeError(f"expected (T, {self.config.n_freq}) frames, got {frames.shape}")
        object.__setattr__(self, "frames", frames)


def log_compress(x, floor: float = AMP_FLOOR) -> np.ndarray:
    """``log(max(x, floor))`` elementwise (natural log)."""
    return np.log(np.maximum(np.asarray(x, dtype=np.float64), floor))


def log_expand(x) -> np.ndarray:
    return np.exp(np.asarray(x, dtype=np.float64))


def stft(w: Waveform, cfg: SpectralConfig) -> ComplexSpectrogram:
    """One-sided STFT of ``w``.

    With ``cfg.center`` the signal is reflect-padded by ``n_fft // 2`` on both
    sides, giving ``T = 1 + len(w) // hop`` frames.
    """
    if len(w) == 0:
        raise SignalError("cannot take the STFT of an empty waveform")
    if w.sample_rate != cfg.sample_rate:
        raise SignalError(
            f"sample rate mismatch: waveform {w.sample_rate} Hz, config {cfg.sample_rate} Hz"
        )
    x = w.samples
    pad = cfg.n_fft // 2
    if cfg.center:
        if len(x) <= pad:
            # reflect padding needs more samples than the pad width
            x = np.pad(x, (0, pad + 1 - len(x)))
            x = np.pad(x, pad, mode="reflect")[: len(w) + 2 * pad]
        else:
            x = np.pad(x, pad, mode="reflect")
    elif len(x) < cfg.n_fft:
        raise SignalError(f"need at least n_fft={cfg.n_fft} samples without centering")
    frames = sliding_window_view(x, cfg.n_fft)[:: cfg.hop]
    return ComplexSpectrogram(np.fft.rfft(frames * cfg.window_array(), axis=-1), cfg)


def _ola_window(cfg: SpectralConfig, n_frames: int) -> np.ndarray:
    win_sq = cfg.window_array() ** 2
    total = cfg.n_fft + cfg.hop * (n_frames - 1)
    out = np.zeros(total)
    for t in range(n_frames):
        out[t * cfg.hop: t * cfg.hop + cfg.n_fft] += win_sq
    return out


def istft(s: ComplexSpectrogram, length: int | None = None) -> Waveform:
    """Inverse STFT by weighted overlap-add.

    Frames are windowed again and the sum is divided by the overlap-added
    squared window (least-squares ISTFT). The output has ``(T - 1) * hop``
    samples when centred, unless ``length`` asks for a specific size.
    """
    cfg = s.config
    if cfg.cola_deviation() > COLA_TOL:
        raise ConfigError(
            f"window/hop pair (n_fft={cfg.n_fft}, win_length={cfg.win_length}, hop={cfg.hop}) "
            "violates the squared-window COLA condition"
        )
    n_frames = s.frames.shape[0]
    if n_frames == 0:
        return Waveform(np.zeros(length or 0), cfg.sample_rate)
    frames = np.fft.irfft(s.frames, n=cfg.n_fft, axis=-1) * cfg.window_array()
    total = cfg.n_fft + cfg.hop * (n_frames - 1)
    y = np.zeros(total)
    for t in range(n_frames):
        y[t * cfg.hop: t * cfg.hop + cfg.n_fft] += frames[t]
    norm = _ola_window(cfg, n_frames)
    nz = norm > OLA_FLOOR
    y[nz] /= norm[nz]
    if cfg.center:
        start = cfg.n_fft // 2
        n_out = cfg.hop * (n_frames - 1) if length is None else length
    else:
        start = 0
        n_out = total if length is None else length
    y = y[start: start + n_out]
    if len(y) < n_out:
        y = np.pad(y, (0, n_out - len(y)))
    return Waveform(y, cfg.sample_rate)


def polar_split(s: ComplexSpectrogram) -> tuple[AmplitudeSpectrogram, PhaseSpectrogram]:
    """Split into linear amplitude and principal phase in (-pi, pi]."""
    amp = np.abs(s.frames)
    # angle(-1 - 0j) is -pi; fold onto +pi to keep the half-open range
    phase = np.angle(s.frames)
    phase[phase == -np.pi] = np.pi
    return (
        AmplitudeSpectrogram(amp, Domain.LINEAR, s.config),
        PhaseSpectrogram(phase, s.config),
    )


def recombine(a: AmplitudeSpectrogram, p: PhaseSpectrogram) -> ComplexSpectrogram:
    if a.domain is not Domain.LINEAR:
        raise DomainError("recombine needs a linear-domain amplitude spectrogram")
    if a.frames.shape != p.frames.shape:
        raise ShapeError(f"amplitude {a.frames.shape} and phase {p.frames.shape} differ")
    return ComplexSpectrogram(a.frames * np.exp(1j * p.frames), a.config)


def amplitude(w: Waveform, cfg: SpectralConfig) -> AmplitudeSpectrogram:
    """Linear magnitude STFT, the ground-truth amplitude used across the package."""
    return AmplitudeSpectrogram(np.abs(stft(w, cfg).frames), Domain.LINEAR, cfg)


def project_consistent(s: ComplexSpectrogram) -> ComplexSpectrogram:
    """``stft(istft(s))`` restricted to the original frames.

    The inverse keeps the half-window tail past the last frame centre so that
    spectrograms of real signals are fixed points whatever the signal length.
    """
    cfg = s.config
    n_frames = s.frames.shape[0]
    length = cfg.hop * (n_frames - 1) + (cfg.n_fft // 2 if cfg.center else 0)
    y = istft(s, length=length if cfg.center else None)
    return ComplexSpectrogram(stft(y, cfg).frames[:n_frames], cfg)
