"""Deterministic synthetic test signals.

``harmonic_voice`` is the stand-in for read speech: a band-limited glottal
pulse train with a drifting pitch contour, passed through a cascade of
formant resonators, gated into syllable-like voiced stretches separated by
short fricative noise bursts, on top of a low noise floor.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .dsp import Waveform

DEFAULT_SR = 22050


class FixtureKind(str, enum.Enum):
    SINE = "sine"
    HARMONIC_VOICE = "harmonic_voice"
    NOISE = "noise"
    CHIRP = "chirp"
    SILENCE = "silence"


@dataclass(frozen=True)
class FixtureSpec:
    kind: FixtureKind
    duration: float = 2.0
    f0: float | None = None
    seed: int = 0
    sample_rate: int = DEFAULT_SR

    def __post_init__(self):
        object.__setattr__(self, "kind", FixtureKind(self.kind))
        if self.duration <= 0:
            raise ValueError(f"duration must be positive, got {self.duration}")


# (F1, F2, F3) of a few vowel-like configurations, Hz; F4/F5 are fixed
_VOWELS = np.array([
    [850.0, 1220.0, 2810.0],
    [610.0, 2330.0, 2990.0],
    [310.0, 2790.0, 3310.0],
    [590.0, 920.0, 2710.0],
    [370.0, 950.0, 2670.0],
    [860.0, 2050.0, 2850.0],
])
_HIGH_FORMANTS = np.array([3900.0, 4700.0])
_BANDWIDTHS = np.array([90.0, 110.0, 170.0, 250.0, 300.0])
# relative F0 perturbation and the pole of its smoothing filter
JITTER = 0.01
JITTER_POLE = 0.98
# aspiration noise relative to the harmonic source (~20 dB HNR)
ASPIRATION = 0.1
# double pole giving -12 dB/octave above ~30 Hz
TILT_POLE = 0.99


def _resonator(freq, bw, sr):
    r = np.exp(-np.pi * bw / sr)
    theta = 2.0 * np.pi * freq / sr
    a = [1.0, -2.0 * r * np.cos(theta), r * r]
    # unity gain at DC, as in a cascade formant synthesiser
    return [sum(a)], a


def _sibilant(n, sr, rng):
    noise = rng.standard_normal(n)
    lo, hi = rng.uniform(3500.0, 4500.0), min(rng.uniform(7500.0, 9500.0), sr / 2 * 0.95)
    return signal.sosfilt(signal.butter(4, [lo, hi], "bandpass", fs=sr, output="sos"), noise)


def _harmonic_voice(n, sr, f0, rng):
    t = np.arange(n) / sr
    # default pitch range of an adult female reader
    base = f0 if f0 is not None else rng.uniform(160.0, 260.0)
    contour = base * (1.0 + 0.08 * np.sin(2 * np.pi * rng.uniform(0.4, 1.2) * t
                                          + rng.uniform(0, 2 * np.pi)))
    jitter = signal.lfilter([1.0 - JITTER_POLE], [1.0, -JITTER_POLE], rng.standard_normal(n))
    contour *= 1.0 + JITTER * jitter / (np.std(jitter) + 1e-12)
    phase = 2.0 * np.pi * np.cumsum(contour) / sr
    n_harm = int(sr / 2 / contour.min())
    # glottal source rolls off at -12 dB/octave
    excitation = np.zeros(n)
    for k in range(1, n_harm + 1):
        alive = k * contour < sr / 2 * 0.95
        excitation += np.where(alive, np.cos(k * phase), 0.0) / (k * k)
    # aspiration noise shares the source's spectral tilt, so the ratio holds per band
    breath = signal.lfilter([1.0], [1.0, -2 * TILT_POLE, TILT_POLE ** 2], rng.standard_normal(n))
    excitation += np.std(excitation) * ASPIRATION * breath / (np.std(breath) + 1e-12)
    n_syl = max(1, int(round(n / sr * 4)))
    bounds = np.linspace(0, n, n_syl + 1).astype(int)
    out = np.zeros(n)
    for i in range(n_syl):
        lo, hi = bounds[i], bounds[i + 1]
        seg = excitation[lo:hi]
        formants = np.concatenate([_VOWELS[rng.integers(len(_VOWELS))] * rng.uniform(0.95, 1.05, 3),
                                   _HIGH_FORMANTS])
        for fc, bw in zip(formants, _BANDWIDTHS):
            b, a = _resonator(fc, bw, sr)
            seg = signal.lfilter(b, a, seg)
        # lip radiation, +6 dB/octave
        seg = np.diff(seg, prepend=seg[0])
        seg = seg / (np.max(np.abs(seg)) + 1e-12) * rng.uniform(0.3, 1.0)
        # onset consonant: pause, sibilant, or nothing
        length = hi - lo
        gap = min(int(rng.uniform(0.04, 0.12) * sr), length // 3)
        ramp = min(int(0.02 * sr), (length - gap) // 4)
        env = np.ones(length)
        env[:gap] = 0.0
        env[gap:gap + ramp] = np.linspace(0.0, 1.0, ramp)
        env[length - ramp:] = np.linspace(1.0, 0.0, ramp)
        out[lo:hi] = seg * env
        onset = rng.integers(3)
        if onset == 1 and gap > 64:
            fric = _sibilant(gap, sr, rng)
            fric *= np.hanning(gap) * rng.uniform(0.05, 0.2) / (np.max(np.abs(fric)) + 1e-12)
            out[lo:lo + gap] += fric
    out += rng.standard_normal(n) * 10 ** (-70 / 20)
    return 0.5 * out / np.max(np.abs(out))


def make_fixture(spec: FixtureSpec) -> Waveform:
    sr = spec.sample_rate
    n = int(round(spec.duration * sr))
    rng = np.random.default_rng(spec.seed)
    t = np.arange(n) / sr
    kind = spec.kind
    if kind is FixtureKind.SINE:
        x = 0.5 * np.sin(2.0 * np.pi * (spec.f0 or 220.0) * t)
    elif kind is FixtureKind.NOISE:
        x = 0.1 * rng.standard_normal(n)
    elif kind is FixtureKind.CHIRP:
        f_lo = spec.f0 or 100.0
        x = 0.5 * signal.chirp(t, f0=f_lo, t1=max(t[-1], 1e-9), f1=min(8000.0, sr / 2 * 0.9),
                               method="logarithmic")
    elif kind is FixtureKind.SILENCE:
        x = np.zeros(n)
    else:
        x = _harmonic_voice(n, sr, spec.f0, rng)
    return Waveform(x, sr)


def fixture_set(n: int, kind: FixtureKind = FixtureKind.HARMONIC_VOICE,
                duration: float = 2.0, seed: int = 0) -> list[Waveform]:
    """``n`` fixtures with consecutive seeds starting at ``seed``."""
    return [make_fixture(FixtureSpec(kind, duration, seed=seed + i)) for i in range(n)]
