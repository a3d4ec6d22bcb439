"""Configuration objects and TOML loading.

:class:`SpectralConfig` is the single source of truth for frame and bin
counts; :class:`MelConfig` and :class:`LossWeights` hang off it.
"""

from __future__ import annotations

import dataclasses
import enum
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

# Lower bound applied to every amplitude before taking logs.
AMP_FLOOR = 1e-5


class MelScale(str, enum.Enum):
    SLANEY = "slaney"
    HTK = "htk"


class MelNorm(str, enum.Enum):
    SLANEY = "slaney"
    NONE = "none"


@dataclass(frozen=True)
class SpectralConfig:
    sample_rate: int = 22050
    n_fft: int = 1024
    hop: int = 256
    win_length: int = 1024
    window: str = "hann"
    center: bool = True

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ConfigError(f"sample_rate must be positive, got {self.sample_rate}")
        if not 0 < self.hop <= self.win_length <= self.n_fft:
            raise ConfigError(
                f"need 0 < hop <= win_length <= n_fft, got hop={self.hop}, "
                f"win_length={self.win_length}, n_fft={self.n_fft}"
            )
        if self.window != "hann":
            raise ConfigError(f"unsupported window {self.window!r}; only 'hann' is available")
        if self.n_fft % 2:
            raise ConfigError("n_fft must be even")

    @property
    def n_freq(self) -> int:
        return self.n_fft // 2 + 1

    def n_frames(self, n_samples: int) -> int:
        """Frame count for a signal of ``n_samples`` samples."""
        if self.center:
            return 1 + n_samples // self.hop
        return 1 + (n_samples - self.n_fft) // self.hop

    def window_array(self) -> np.ndarray:
        """Periodic Hann window of ``win_length`` zero-padded (centred) to ``n_fft``."""
        n = np.arange(self.win_length)
        win = 0.5 - 0.5 * np.cos(2.0 * np.pi * n / self.win_length)
        if self.win_length < self.n_fft:
            left = (self.n_fft - self.win_length) // 2
            win = np.pad(win, (left, self.n_fft - self.win_length - left))
        return win

    def cola_deviation(self) -> float:
        """Relative peak-to-peak deviation of the overlap-added squared window."""
        win_sq = self.window_array() ** 2
        period = np.zeros(self.hop)
        for start in range(0, self.n_fft, self.hop):
            chunk = win_sq[start:start + self.hop]
            period[: len(chunk)] += chunk
        mean = period.mean()
        if mean == 0:
            return np.inf
        return float((period.max() - period.min()) / mean)


@dataclass(frozen=True)
class MelConfig:
    n_mels: int = 80
    f_min: float = 0.0
    # None means min(16 kHz, Nyquist)
    f_max: float | None = None
    mel_scale: MelScale = MelScale.SLANEY
    norm: MelNorm = MelNorm.SLANEY

    def __post_init__(self):
        object.__setattr__(self, "mel_scale", MelScale(self.mel_scale))
        object.__setattr__(self, "norm", MelNorm(self.norm))
        if self.n_mels < 1:
            raise ConfigError(f"n_mels must be >= 1, got {self.n_mels}")
        if self.f_min < 0:
            raise ConfigError(f"f_min must be >= 0, got {self.f_min}")

    def resolved_f_max(self, sample_rate: int) -> float:
        """Upper cutoff after clamping to Nyquist.

        The 16 kHz default exceeds Nyquist at 22.05 kHz; it is clamped with a
        log message instead of raising, so that configuration loads unchanged.
        """
        nyquist = sample_rate / 2.0
        f_max = 16000.0 if self.f_max is None else float(self.f_max)
        if f_max > nyquist:
            if self.f_max is not None:
                log.info("f_max %.1f Hz clamped to Nyquist %.1f Hz", f_max, nyquist)
            f_max = nyquist
        if not self.f_min < f_max:
            raise ConfigError(f"need f_min < f_max, got {self.f_min} >= {f_max}")
        return f_max


@dataclass(frozen=True)
class LossWeights:
    """Generator loss weights.

    Defaults follow the public APNet2 training script: 45 for the amplitude
    loss, 100 for the phase loss, 20 for the STFT loss and 45 for the mel
    term (the adversarial and feature-matching terms carry weight 1 there but
    are zero here, so the shared ``lambda_w`` takes the mel weight).
    """

    lambda_a: float = 45.0
    lambda_p: float = 100.0
    lambda_s: float = 20.0
    lambda_w: float = 45.0

    def __post_init__(self):
        for f in dataclasses.fields(self):
            if getattr(self, f.name) < 0:
                raise ConfigError(f"{f.name} must be non-negative")


@dataclass(frozen=True)
class Config:
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    mel: MelConfig = field(default_factory=MelConfig)
    loss: LossWeights = field(default_factory=LossWeights)


def _build(cls, table, section):
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(table) - names
    if unknown:
        raise ConfigError(f"unknown key(s) in [{section}]: {', '.join(sorted(unknown))}")
    try:
        return cls(**table)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}]: {exc}") from exc


def load_config(path: str | Path | None = None) -> Config:
    """Read a TOML file with optional ``[spectral]``, ``[mel]`` and ``[loss]`` tables."""
    if path is None:
        return Config()
    with open(path, "rb") as fh:
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    unknown = set(data) - {"spectral", "mel", "loss"}
    if unknown:
        raise ConfigError(f"{path}: unknown section(s): {', '.join(sorted(unknown))}")
    return Config(
        spectral=_build(SpectralConfig, data.get("spectral", {}), "spectral"),
        mel=_build(MelConfig, data.get("mel", {}), "mel"),
        loss=_build(LossWeights, data.get("loss", {}), "loss"),
    )
