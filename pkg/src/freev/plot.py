"""SVG figures of prior-benchmark reports."""

from __future__ import annotations

from dataclasses import dataclass

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .errors import FormatError  # noqa: E402
from .prior import TABLE_LABELS, BenchReport, PriorVariant  # noqa: E402


@dataclass(frozen=True)
class PlotSummary:
    n_series: int
    n_bars: int


def _parse(report) -> BenchReport:
    if isinstance(report, BenchReport):
        rep = report
    else:
        try:
            rep = BenchReport.from_dict(report)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed bench report: {exc}") from None
    if not rep.results:
        raise FormatError("report has an empty result series")
    return rep


def plot_reports(reports, out_path, labels=None) -> PlotSummary:
    """Bar chart for one report, time/error scatter overlay for several.

    A single report gets two panels (per-clip time on a log axis, LAS-RMSE)
    with one bar per method. Several reports are drawn as one scatter series
    each in the time/error plane.
    """
    reports = [_parse(r) for r in reports]
    if not reports:
        raise FormatError("no reports to plot")
    labels = labels or [f"report {i + 1}" for i in range(len(reports))]
    if len(reports) == 1:
        rep = reports[0]
        names = [TABLE_LABELS[PriorVariant(r.method)] for r in rep.results]
        fig, (ax_t, ax_e) = plt.subplots(1, 2, figsize=(8, 3.2))
        ax_t.bar(names, [r.time_per_clip_s for r in rep.results], color="tab:blue")
        ax_t.set_yscale("log")
        ax_t.set_ylabel("time per clip (s)")
        ax_e.bar(names, [r.las_rmse for r in rep.results], color="tab:orange")
        ax_e.set_ylabel("LAS-RMSE")
        n_bars = len(rep.results)
    else:
        fig, ax = plt.subplots(figsize=(5, 4))
        for rep, label in zip(reports, labels):
            ax.scatter([r.time_per_clip_s for r in rep.results],
                       [r.las_rmse for r in rep.results], label=label)
            for r in rep.results:
                ax.annotate(TABLE_LABELS[PriorVariant(r.method)],
                            (r.time_per_clip_s, r.las_rmse), fontsize=7)
        ax.set_xscale("log")
        ax.set_xlabel("time per clip (s)")
        ax.set_ylabel("LAS-RMSE")
        ax.legend()
        n_bars = 0
    fig.tight_layout()
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return PlotSummary(n_series=len(reports), n_bars=n_bars)
