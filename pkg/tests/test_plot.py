import pytest

from freev.errors import FormatError
from freev.plot import plot_reports
from freev.prior import BenchReport, MethodResult


def report(scale=1.0):
    rows = [MethodResult(m, t * scale, t * scale, e, [e]) for m, t, e in
            [("nnls", 0.3, 6.9), ("ls", 4e-4, 1.27), ("pi", 3e-4, 1.27), ("pi-abs", 3.2e-4, 0.77)]]
    return BenchReport(rows, 1, 2.0, "test")


class TestPlot:
    def test_four_bars(self, tmp_path):
        out = tmp_path / "a.svg"
        s = plot_reports([report().to_dict()], out)
        assert s.n_bars == 4 and s.n_series == 1
        assert out.read_text().lstrip().startswith("<?xml")

    def test_overlay(self, tmp_path):
        s = plot_reports([report(), report(2.0)], tmp_path / "b.svg")
        assert s.n_series == 2

    def test_empty_series(self, tmp_path):
        empty = BenchReport([], 0, 2.0, "test").to_dict()
        with pytest.raises(FormatError):
            plot_reports([empty], tmp_path / "c.svg")

    def test_malformed(self, tmp_path):
        with pytest.raises(FormatError):
            plot_reports([{"results": [{"method": "pi"}]}], tmp_path / "d.svg")
        with pytest.raises(FormatError):
            plot_reports([], tmp_path / "e.svg")
