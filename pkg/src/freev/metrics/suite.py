"""Per-pair metric reports and their aggregation."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from ..config import SpectralConfig
from ..dsp import Waveform
from ..errors import SignalError
from ..melbank import MelFilterbank, build_filterbank
from .pitch import f0_metrics, track_pitch
from .spectral import las_rmse, mcd
from .stoi import stoi

COLUMNS = ("mcd", "las_rmse", "vuv_f1", "periodicity_err", "f0_rmse", "stoi")
HEADERS = ("MCD", "LAS-RMSE", "V/UV F1", "Periodicity", "F0-RMSE", "STOI")


@dataclass(frozen=True)
class MetricReport:
    mcd: float
    las_rmse: float
    vuv_f1: float
    periodicity_err: float
    f0_rmse: float | None
    stoi: float
    f0_unit: str = "Hz"

    def __post_init__(self):
        for name in COLUMNS:
            v = getattr(self, name)
            if v is None and name == "f0_rmse":
                continue
            if not math.isfinite(v):
                raise ValueError(f"{name} is not finite")
        if not 0.0 <= self.vuv_f1 <= 1.0:
            raise ValueError(f"vuv_f1 out of range: {self.vuv_f1}")
        if not 0.0 <= self.stoi <= 1.0:
            raise ValueError(f"stoi out of range: {self.stoi}")

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_pair(ref: Waveform, deg: Waveform, fb: MelFilterbank | None = None) -> MetricReport:
    """All objective metrics of ``deg`` against the time-aligned ``ref``."""
    if ref.sample_rate != deg.sample_rate:
        raise SignalError(f"sample rates differ: {ref.sample_rate} vs {deg.sample_rate}")
    if fb is None:
        fb = build_filterbank(SpectralConfig(sample_rate=ref.sample_rate))
    cfg = fb.spectral_config
    n = min(len(ref), len(deg))
    ref = Waveform(ref.samples[:n], ref.sample_rate)
    deg = Waveform(deg.samples[:n], deg.sample_rate)
    f0_rmse, vuv_f1, per_err = f0_metrics(track_pitch(ref, hop=cfg.hop),
                                          track_pitch(deg, hop=cfg.hop))
    return MetricReport(mcd=mcd(ref, deg, fb), las_rmse=las_rmse(ref, deg, cfg),
                        vuv_f1=vuv_f1, periodicity_err=per_err, f0_rmse=f0_rmse,
                        stoi=stoi(ref, deg))


def aggregate(reports: list[MetricReport]) -> dict:
    """Column means; F0-RMSE averages only pairs where it is defined."""
    if not reports:
        raise ValueError("no reports to aggregate")
    out = {}
    for name in COLUMNS:
        vals = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        out[name] = float(np.mean(vals)) if vals else None
    out["f0_unit"] = reports[0].f0_unit
    out["pairs"] = len(reports)
    return out


def format_table(summary: dict) -> str:
    """One header row and one value row, in the usual vocoder-table column order."""
    cells = []
    for name in COLUMNS:
        v = summary.get(name)
        cells.append("n/a" if v is None else f"{v:.4f}")
    widths = [max(len(h), len(c)) for h, c in zip(HEADERS, cells)]
    head = " | ".join(h.ljust(w) for h, w in zip(HEADERS, widths))
    row = " | ".join(c.ljust(w) for c, w in zip(cells, widths))
    return f"{head}\n{row}\n(F0-RMSE in {summary.get('f0_unit', 'Hz')})"
