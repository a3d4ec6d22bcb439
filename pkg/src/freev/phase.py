"""Parallel phase estimation, phase anti-wrapping and a Griffin-Lim baseline."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import (AmplitudeSpectrogram, ComplexSpectrogram, Domain, PhaseSpectrogram,
                  project_consistent)
from .errors import DomainError, ShapeError


@dataclass(frozen=True)
class PhaseComponents:
    """Pseudo real part ``r`` and pseudo imaginary part ``i``, both (T, n_freq)."""

    r: np.ndarray
    i: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.r, dtype=np.float64)
        i = np.asarray(self.i, dtype=np.float64)
        if r.shape != i.shape:
            raise ShapeError(f"R {r.shape} and I {i.shape} differ")
        if not (np.all(np.isfinite(r)) and np.all(np.isfinite(i))):
            raise ValueError("phase components must be finite")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "i", i)


def parallel_phase_raw(r, i) -> np.ndarray:
    """Phase from pseudo real/imaginary parts, in (-pi, pi].

    Evaluates ``arctan(I/R) - pi/2 * sgn(I) * (sgn(R) - 1)`` and patches the
    cells the closed form gets wrong: ``R = 0`` (where ``I/R`` is undefined)
    and the negative real axis ``I = 0, R < 0`` (where ``sgn(0) = 0`` gives 0
    instead of pi). The result matches the two-argument arctangent, with the
    origin mapped to 0.
    """
    r = np.asarray(r, dtype=np.float64)
    i = np.asarray(i, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        phase = np.arctan(i / r) - 0.5 * np.pi * np.sign(i) * (np.sign(r) - 1.0)
    on_imag_axis = r == 0
    phase = np.where(on_imag_axis, 0.5 * np.pi * np.sign(i), phase)
    phase = np.where((i == 0) & (r < 0), np.pi, phase)
    # arctan(I/R) can land a hair past +-pi/2 when |I/R| overflows
    phase = np.where(phase <= -np.pi, phase + 2 * np.pi, phase)
    return np.minimum(phase, np.pi)


def parallel_phase(pc: PhaseComponents, config=None) -> PhaseSpectrogram | np.ndarray:
    """Phase head over (R, I); returns a :class:`PhaseSpectrogram` when ``config`` is given."""
    phase = parallel_phase_raw(pc.r, pc.i)
    return phase if config is None else PhaseSpectrogram(phase, config)


def anti_wrap(x) -> np.ndarray:
    """Absolute principal deviation ``|x - 2 pi round(x / 2 pi)|``, in [0, pi]."""
    x = np.asarray(x, dtype=np.float64)
    return np.abs(x - 2.0 * np.pi * np.round(x / (2.0 * np.pi)))


def consistency_residual(spec: ComplexSpectrogram) -> float:
    """``||stft(istft(S)) - S||_F``, zero for spectrograms of real signals."""
    return float(np.linalg.norm(project_consistent(spec).frames - spec.frames))


def griffin_lim(a: AmplitudeSpectrogram, iters: int = 32,
                callback=None) -> PhaseSpectrogram:
    """Griffin-Lim phase retrieval from zero-phase initialisation.

    Each round projects onto consistent spectrograms (ISTFT then STFT) and
    restores the target magnitude. ``callback(k, spec)`` sees the
    magnitude-corrected spectrogram after every round.
    """
    if a.domain is not Domain.LINEAR:
        raise DomainError("griffin_lim needs a linear-domain amplitude spectrogram")
    if iters < 0:
        raise ValueError("iters must be >= 0")
    cfg = a.config
    mag = a.frames
    spec = mag.astype(np.complex128)
    for k in range(iters):
        rebuilt = project_consistent(ComplexSpectrogram(spec, cfg)).frames
        spec = mag * np.exp(1j * np.angle(rebuilt))
        if callback is not None:
            callback(k, ComplexSpectrogram(spec, cfg))
    phase = np.angle(spec)
    phase[phase == -np.pi] = np.pi
    return PhaseSpectrogram(phase, cfg)
