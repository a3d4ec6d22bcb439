"""Forward evaluation of the generator loss family (no gradients).

The total follows ``lambda_a L_A + lambda_p L_P + lambda_s L_S +
lambda_w (L_mel + L_fm + L_g)`` with ``L_P = inst + gd + ptd`` and
``L_S = consistency + l1``. There is no discriminator here, so ``L_fm`` and
``L_g`` are carried as zeros.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .config import LossWeights
from .dsp import (AmplitudeSpectrogram, ComplexSpectrogram, Domain, PhaseSpectrogram,
                  Waveform, amplitude, log_compress, project_consistent, stft)
from .errors import DomainError, ShapeError
from .melbank import MelFilterbank
from .phase import anti_wrap


@dataclass(frozen=True)
class LossBreakdown:
    amplitude: float
    inst_phase: float
    group_delay: float
    phase_time_diff: float
    stft_consistency: float
    stft_l1: float
    mel_l1: float
    total: float
    feature_matching: float = 0.0
    adversarial: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)


def _check_shapes(a, b):
    if a.shape != b.shape:
        raise ShapeError(f"shape mismatch: {a.shape} vs {b.shape}")


def amplitude_loss(pred: AmplitudeSpectrogram, ref: AmplitudeSpectrogram) -> float:
    """Mean squared difference of log amplitudes."""
    if pred.domain is not Domain.LOG or ref.domain is not Domain.LOG:
        raise DomainError("amplitude_loss compares log-domain spectrograms")
    _check_shapes(pred.frames, ref.frames)
    return float(np.mean((pred.frames - ref.frames) ** 2))


def phase_losses(pred: PhaseSpectrogram | np.ndarray,
                 ref: PhaseSpectrogram | np.ndarray) -> tuple[float, float, float]:
    """Instantaneous-phase, group-delay and phase-time-difference losses.

    Each is the mean anti-wrapped deviation; group delay differences are
    taken along frequency and time differences along frames.
    """
    p = getattr(pred, "frames", pred)
    r = getattr(ref, "frames", ref)
    p = np.asarray(p, dtype=np.float64)
    r = np.asarray(r, dtype=np.float64)
    _check_shapes(p, r)
    if p.shape[0] < 2:
        raise ShapeError("phase time difference needs at least 2 frames")
    if p.shape[1] < 2:
        raise ShapeError("group delay needs at least 2 frequency bins")
    inst = np.mean(anti_wrap(p - r))
    gd = np.mean(anti_wrap(np.diff(p, axis=1) - np.diff(r, axis=1)))
    ptd = np.mean(anti_wrap(np.diff(p, axis=0) - np.diff(r, axis=0)))
    return float(inst), float(gd), float(ptd)


def stft_losses(pred: ComplexSpectrogram, ref: ComplexSpectrogram) -> tuple[float, float]:
    """STFT consistency loss and L1 distance to the reference.

    Both average ``|.|`` over real and imaginary parts of every cell.
    """
    _check_shapes(pred.frames, ref.frames)
    diff = pred.frames - project_consistent(pred).frames
    consistency = 0.5 * (np.mean(np.abs(diff.real)) + np.mean(np.abs(diff.imag)))
    d = pred.frames - ref.frames
    l1 = 0.5 * (np.mean(np.abs(d.real)) + np.mean(np.abs(d.imag)))
    return float(consistency), float(l1)


def _truncate(a: Waveform, b: Waveform):
    n = min(len(a), len(b))
    return Waveform(a.samples[:n], a.sample_rate), Waveform(b.samples[:n], b.sample_rate)


def mel_l1(pred_wave: Waveform, ref_wave: Waveform, fb: MelFilterbank) -> float:
    """Mean absolute difference of log-mel spectrograms (shorter length wins)."""
    p, r = _truncate(pred_wave, ref_wave)
    cfg = fb.spectral_config
    lp = log_compress(amplitude(p, cfg).frames @ fb.m_t)
    lr = log_compress(amplitude(r, cfg).frames @ fb.m_t)
    return float(np.mean(np.abs(lp - lr)))


def total_generator_loss(amplitude: float, inst_phase: float, group_delay: float,
                         phase_time_diff: float, stft_consistency: float, stft_l1: float,
                         mel_l1: float, weights: LossWeights = LossWeights()) -> LossBreakdown:
    """Weighted total; feature-matching and adversarial terms are fixed at 0."""
    fm = adv = 0.0
    l_p = inst_phase + group_delay + phase_time_diff
    l_s = stft_consistency + stft_l1
    total = (weights.lambda_a * amplitude + weights.lambda_p * l_p
             + weights.lambda_s * l_s + weights.lambda_w * (mel_l1 + fm + adv))
    return LossBreakdown(amplitude, inst_phase, group_delay, phase_time_diff,
                         stft_consistency, stft_l1, mel_l1, float(total), fm, adv)


def waveform_losses(pred: Waveform, ref: Waveform, fb: MelFilterbank,
                    weights: LossWeights = LossWeights()) -> LossBreakdown:
    """Full breakdown for a predicted waveform against its reference.

    The predicted spectra are read off ``stft(pred)`` (a consistent
    spectrogram, so the consistency term is ~0).
    """
    p, r = _truncate(pred, ref)
    cfg = fb.spectral_config
    sp, sr = stft(p, cfg), stft(r, cfg)
    amp_p = AmplitudeSpectrogram(np.abs(sp.frames), Domain.LINEAR, cfg).to_log()
    amp_r = AmplitudeSpectrogram(np.abs(sr.frames), Domain.LINEAR, cfg).to_log()
    inst, gd, ptd = phase_losses(np.angle(sp.frames), np.angle(sr.frames))
    cons, l1 = stft_losses(sp, sr)
    return total_generator_loss(amplitude_loss(amp_p, amp_r), inst, gd, ptd, cons, l1,
                                mel_l1(p, r, fb), weights)
