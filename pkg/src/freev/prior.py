"""Amplitude-spectrum priors from mel spectrograms, and their benchmark.

Four estimators recover a linear amplitude spectrogram from ``X = A M^T``:

``nnls``
    per-frame Lawson-Hanson non-negative least squares;
``ls``
    minimum-norm least squares solved on every call from cached SVD factors
    of ``M``, negatives then clamped;
``pi``
    one product with the precomputed pseudo-inverse, negatives clamped;
``pi-abs``
    the same product passed through ``abs`` before clamping.

Every output is floored at ``1e-5``.
"""

from __future__ import annotations

import enum
import json
import platform
import statistics
import time
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np
from threadpoolctl import threadpool_limits

from .config import AMP_FLOOR
from .dsp import AmplitudeSpectrogram, Domain, Waveform, amplitude
from .errors import ShapeError, SignalError
from .melbank import MelFilterbank, MelSpectrogram, apply_mel
from .metrics.spectral import log_spectral_rmse
from .nnls import nnls_frames


class PriorVariant(str, enum.Enum):
    NNLS = "nnls"
    LEAST_SQUARES = "ls"
    PSEUDO_INVERSE = "pi"
    PSEUDO_INVERSE_ABS = "pi-abs"


TABLE_LABELS = {
    PriorVariant.NNLS: "NNLS",
    PriorVariant.LEAST_SQUARES: "LS",
    PriorVariant.PSEUDO_INVERSE: "PI",
    PriorVariant.PSEUDO_INVERSE_ABS: "PI w/ abs",
}


@dataclass(frozen=True)
class PriorMethod:
    variant: PriorVariant = PriorVariant.PSEUDO_INVERSE_ABS
    nnls_max_iter: int = 500
    nnls_tol: float = 1e-8

    def __post_init__(self):
        object.__setattr__(self, "variant", PriorVariant(self.variant))
        if self.nnls_max_iter <= 0 or self.nnls_tol <= 0:
            raise ValueError("nnls_max_iter and nnls_tol must be positive")

    @classmethod
    def parse_list(cls, text: str) -> list["PriorMethod"]:
        """``"nnls,ls,pi,pi-abs"`` -> methods in the given order."""
        names = [t.strip() for t in text.split(",") if t.strip()]
        if not names:
            raise ValueError("no prior methods given")
        return [cls(PriorVariant(n)) for n in names]


ALL_METHODS = tuple(PriorMethod(v) for v in PriorVariant)


@lru_cache(maxsize=8)
def _gram(fb: MelFilterbank) -> np.ndarray:
    return fb.m.T @ fb.m


@lru_cache(maxsize=8)
def _svd_factors(fb: MelFilterbank):
    u, s, vt = np.linalg.svd(fb.m, full_matrices=False)
    keep = s > 1e-10 * s.max()
    return np.ascontiguousarray(u[:, keep]), s[keep], np.ascontiguousarray(vt[keep])


def _least_squares(x: np.ndarray, fb: MelFilterbank) -> np.ndarray:
    # min-norm solve with M = U S V^T: a = V S^-1 U^T x, frame-major
    u, s, vt = _svd_factors(fb)
    return ((x @ u) / s) @ vt


def estimate_raw(x: np.ndarray, fb: MelFilterbank, method: PriorMethod) -> np.ndarray:
    """Frame-major estimate ``(T, n_freq)`` from linear mel frames ``(T, n_mels)``."""
    v = method.variant
    if v is PriorVariant.PSEUDO_INVERSE_ABS:
        return np.maximum(np.abs(x @ fb.m_pinv_t), AMP_FLOOR)
    if v is PriorVariant.PSEUDO_INVERSE:
        return np.maximum(x @ fb.m_pinv_t, AMP_FLOOR)
    if v is PriorVariant.LEAST_SQUARES:
        return np.maximum(_least_squares(x, fb), AMP_FLOOR)
    est = nnls_frames(fb.m, x, max_iter=method.nnls_max_iter, tol=method.nnls_tol,
                      gram=_gram(fb))
    return np.maximum(est, AMP_FLOOR)


def estimate_prior(x: MelSpectrogram, fb: MelFilterbank,
                   method: PriorMethod = PriorMethod()) -> AmplitudeSpectrogram:
    """Linear amplitude estimate from a linear mel spectrogram."""
    if x.domain is not Domain.LINEAR:
        raise ShapeError("estimate_prior needs a linear-domain mel spectrogram")
    if x.n_mels != fb.n_mels:
        raise ShapeError(f"mel spectrogram has {x.n_mels} bands, filterbank {fb.n_mels}")
    return AmplitudeSpectrogram(estimate_raw(x.frames, fb, method), Domain.LINEAR,
                                fb.spectral_config)


@dataclass
class MethodResult:
    method: str
    time_per_clip_s: float
    time_median_s: float
    las_rmse: float
    las_rmse_per_clip: list[float] = field(repr=False)
    repeats: int = 1


@dataclass
class BenchReport:
    results: list[MethodResult]
    clip_count: int
    clip_duration_s: float
    hardware: str
    threads: int = 1
    kind: str = "prior-bench"

    def result(self, variant) -> MethodResult:
        name = PriorVariant(variant).value
        for r in self.results:
            if r.method == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "BenchReport":
        results = [MethodResult(**r) for r in data["results"]]
        rest = {k: v for k, v in data.items() if k != "results"}
        return cls(results=results, **rest)

    def to_table(self) -> str:
        """Plain-text table with one column per method and rows for time and LAS-RMSE."""
        labels = [TABLE_LABELS[PriorVariant(r.method)] for r in self.results]
        times = [format_duration(r.time_per_clip_s) for r in self.results]
        errs = [f"{r.las_rmse:.4f}" for r in self.results]
        width = max(10, *(len(s) for s in labels + times + errs))
        head = f"{'Method':<14}|" + "".join(f" {s:>{width}}" for s in labels)
        lines = [
            head,
            "-" * len(head),
            f"{'Time (↓)':<14}|" + "".join(f" {s:>{width}}" for s in times),
            f"{'LAS-RMSE (↓)':<14}|" + "".join(f" {s:>{width}}" for s in errs),
            "",
            f"{self.clip_count} clips x {self.clip_duration_s:.2f} s; time is per clip "
            f"(mean of per-clip medians), {self.threads} thread(s); {self.hardware}",
        ]
        return "\n".join(lines)


def format_duration(seconds: float) -> str:
    if seconds >= 1.0:
        return f"{seconds:.2f}s"
    if seconds >= 1e-3:
        return f"{seconds * 1e3:.0f}ms"
    return f"{seconds * 1e6:.0f}µs"


def _time_call(fn, repeats: int):
    """Median wall time of ``repeats`` calls, and the last call's result."""
    samples = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        samples.append(time.perf_counter() - t0)
    return statistics.median(samples), out


def bench_priors(clips: list[Waveform], fb: MelFilterbank,
                 methods=ALL_METHODS, repeats: int = 10, nnls_repeats: int = 1,
                 warmup: int = 2) -> BenchReport:
    """Time and score each prior method on ``clips``.

    Features (ground-truth amplitude and its mel projection) are computed up
    front; only the prior computation is timed. Each clip's time is the
    median over ``repeats`` calls (``nnls_repeats`` for NNLS, whose single
    call already takes a sizeable fraction of a second), after ``warmup``
    untimed calls on the first clip. BLAS is pinned to one thread.
    """
    if not clips:
        raise SignalError("bench_priors needs at least one clip")
    if min(repeats, nnls_repeats) < 1:
        raise ValueError("repeat counts must be at least 1")
    cfg = fb.spectral_config
    feats = []
    for clip in clips:
        a = amplitude(clip, cfg)
        feats.append((a.frames, apply_mel(a, fb).frames))
    _gram(fb), _svd_factors(fb)
    results = []
    with threadpool_limits(limits=1):
        for method in methods:
            reps = nnls_repeats if method.variant is PriorVariant.NNLS else repeats
            for _ in range(warmup):
                estimate_raw(feats[0][1], fb, method)
            times, errs = [], []
            for a_true, x in feats:
                t, est = _time_call(lambda: estimate_raw(x, fb, method), reps)
                times.append(t)
                errs.append(log_spectral_rmse(est, a_true))
            results.append(MethodResult(
                method=method.variant.value,
                time_per_clip_s=float(np.mean(times)),
                time_median_s=float(np.median(times)),
                las_rmse=float(np.mean(errs)),
                las_rmse_per_clip=[float(e) for e in errs],
                repeats=reps,
            ))
    return BenchReport(
        results=results,
        clip_count=len(clips),
        clip_duration_s=float(np.mean([c.duration for c in clips])),
        hardware=f"{platform.machine()} {platform.processor() or platform.system()}".strip(),
    )
