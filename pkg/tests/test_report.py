import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pumpstudy.errors import DomainError
from pumpstudy.eventstore import percent_half_up
from pumpstudy.eventstudy import AbnormalPanel, TrainingStats, average_curves
from pumpstudy.regression import ColumnFailure, RegressionResult
from pumpstudy.report import (
    cell,
    emit_plot_data,
    format_coef,
    format_stat,
    parse_regression_table,
    render_regression_table,
    render_summary_table,
    se_cell,
    summary_stats,
)
from pumpstudy.timeseries import MinuteSeries


class TestSummaryStats:
    def test_median_of_three(self):
        assert summary_stats([5, 15, 53]).p50 == 15

    def test_quartiles(self):
        s = summary_stats([1, 2, 3, 4])
        assert (s.p25, s.p50, s.p75) == (1.75, 2.5, 3.25)

    def test_constant(self):
        s = summary_stats([7.0] * 5)
        assert (s.mean, s.std, s.min, s.p25, s.p50, s.p75, s.max) == (7, 0, 7, 7, 7, 7, 7)

    def test_sample_std(self):
        assert summary_stats([1, 3]).std == pytest.approx(np.sqrt(2))

    def test_empty(self):
        with pytest.raises(DomainError):
            summary_stats([])

    @given(st.lists(st.integers(0, 10**6), min_size=1, max_size=30), st.randoms())
    def test_permutation_invariant_and_ordered(self, xs, rnd):
        ys = list(xs)
        rnd.shuffle(ys)
        a, b = summary_stats(xs), summary_stats(ys)
        assert a == b
        assert a.min <= a.p25 <= a.p50 <= a.p75 <= a.max


class TestFormatting:
    def test_reference_cell(self):
        assert cell(0.325, 0.002) == "0.325***"
        assert se_cell(0.049) == "(0.049)"

    def test_zero(self):
        assert cell(0.0, 1.0) == "0.000"
        assert format_coef(-0.0) == "0.000"
        assert format_coef(-1e-9) == "0.000"

    @pytest.mark.parametrize("x,text", [(-0.47, "-0.47"), (0.62, "0.62"), (-2.202, "-2.202"), (1.18, "1.18"),
                                        (0.0005, "0.001"), (-0.0005, "-0.001"), (2.0, "2.000"), (1.2345, "1.235")])
    def test_half_up_and_trimming(self, x, text):
        assert format_coef(x) == text

    def test_adj_r2_style(self):
        assert format_coef(11.8, 2) == "11.8"
        assert format_coef(-0.24, 2) == "-0.24"

    def test_table1_percent(self):
        assert percent_half_up(13, 322) == 4.04
        assert percent_half_up(11, 322) == 3.42
        assert percent_half_up(6, 322) == 1.86

    @pytest.mark.parametrize("x,text", [(187.81, "187.81"), (1119.05, "1,119.05"), (0, "0"), (5, "5"), (15, "15"),
                                        (53, "53"), (20439, "20,439")])
    def test_table2_cells(self, x, text):
        assert format_stat(x) == text

    def test_table2_rows(self):
        from pumpstudy.report import SummaryStats
        text = render_summary_table(SummaryStats(187.81, 1119.05, 0, 5, 15, 53, 20439))
        rows = [ln.split() for ln in text.splitlines()]
        assert rows == [["Statistics", "Tweets"], ["Mean", "187.81"], ["Std", "1,119.05"], ["Min", "0"],
                        ["25th", "5"], ["50th", "15"], ["75th", "53"], ["Max", "20,439"]]


def _result(name, dep, terms, coefs, ses, ps, adj=0.1, n=50, dropped=0):
    k = len(terms)
    arr = lambda v: np.asarray(v, dtype=float)
    return RegressionResult(list(terms), arr(coefs), arr(ses), arr(coefs) / arr(ses), arr(ps),
                            adj + 0.01, adj, n, 1.0, dropped, name, dep)


def reference_results():
    return [
        _result("(1)", "CAR(-31,-2)", ["Intercept", "CAT(-31,-2)"], [-0.008, 0.325], [0.042, 0.049], [0.85, 0.001], 0.118),
        _result("(2)", "CAR(2,31)", ["Intercept", "CAT(-31,-2)"], [-9.752, -0.47], [0.854, 0.991], [0.0, 0.6], -0.0024),
        _result("(3)", "CAR(2,31)", ["Intercept", "CAT(-31,-2)", "CAT(-1,1)", "CAR(-31,-2)", "CAR(-1,1)"],
                [0.548, 0.257, -0.127, -2.979, -0.732], [0.702, 0.646, 0.681, 0.701, 0.034],
                [0.4, 0.7, 0.85, 0.0001, 0.0], 0.6378),
        _result("(4)", "CAR(32,720)", ["Intercept", "CAT(-31,-2)"], [-5.796, -2.202], [0.533, 0.618], [0, 0.0004], 0.0352),
    ]


class TestRegressionTable:
    def test_layout(self):
        text = render_regression_table(reference_results())
        lines = text.splitlines()
        assert lines[0].split() == ["(1)", "(2)", "(3)", "(4)"]
        assert lines[1].split() == ["CAR(-31,-2)", "CAR(2,31)", "CAR(2,31)", "CAR(32,720)"]
        cat = next(i for i, ln in enumerate(lines) if ln.startswith("CAT(-31,-2)"))
        assert lines[cat].split()[1:] == ["0.325***", "-0.47", "0.257", "-2.202***"]
        assert lines[cat + 1].split() == ["(0.049)", "(0.991)", "(0.646)", "(0.618)"]
        adj = next(ln for ln in lines if ln.startswith("Adj. R2 (%)"))
        assert adj.split()[3:] == ["11.8", "-0.24", "63.78", "3.52"]
        labels = [ln.split()[0] for ln in lines[3:] if ln[:1].strip() and not ln.startswith("-")]
        assert labels[:5] == ["Intercept", "CAT(-31,-2)", "CAT(-1,1)", "CAR(-31,-2)", "CAR(-1,1)"]

    def test_round_trip(self):
        results = reference_results()
        parsed = parse_regression_table(render_regression_table(results))
        expected = {(r.name, t): c for r in results for t, c in zip(r.terms, r.coefficients)}
        assert parsed.keys() == expected.keys()
        for key, v in expected.items():
            assert abs(parsed[key] - v) <= 5e-4

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=6, max_size=6),
           st.lists(st.floats(0, 1), min_size=6, max_size=6))
    def test_round_trip_random(self, coefs, ps):
        res = [_result("(1)", "CAR(-31,-2)", ["Intercept", "CAT(-31,-2)"], coefs[:2], [1, 1], ps[:2]),
               _result("(2)", "CAR(2,31)", ["Intercept", "CAT(-31,-2)", "CAV(-1,1)", "CAR(-1,1)"], coefs[2:],
                       [1, 1, 1, 1], ps[2:])]
        parsed = parse_regression_table(render_regression_table(res))
        for r in res:
            for t, c in zip(r.terms, r.coefficients):
                assert abs(parsed[(r.name, t)] - c) <= 5e-4

    def test_failed_column(self):
        res = reference_results()[:2] + [ColumnFailure("(3)", "CAR(2,31)", "regressor 'CAV(-1,1)' has zero variance", 2)]
        text = render_regression_table(res)
        assert "(3) failed: regressor 'CAV(-1,1)' has zero variance" in text
        assert ("(3)", "Intercept") not in parse_regression_table(text)
        dropped = next(ln for ln in text.splitlines() if ln.startswith("Dropped events"))
        assert dropped.split()[-1] == "2"


def _panel(eid):
    g = MinuteSeries.full(-720, np.linspace(0, 1, 1441))
    return AbnormalPanel(eid, g, g, g, TrainingStats(0, 0, 0, 1, 2160), True)


class TestPlotData:
    def test_single_event_curves(self, tmp_path):
        paths = emit_plot_data(tmp_path, average_curves([_panel("a")]), [], {})
        assert [p.name for p in paths] == ["fig7_weekly.csv", "fig8_hist.csv", "fig9_curves.csv"]
        lines = (tmp_path / "fig9_curves.csv").read_text().splitlines()
        assert len(lines) == 1 + 1441
        assert lines[1].startswith("-720,") and lines[-1].startswith("720,")
        assert (tmp_path / "fig7_weekly.csv").read_text() == "week_start,count\n"

    def test_idempotent(self, tmp_path):
        from datetime import date
        args = (average_curves([_panel("a"), _panel("b")]), [(date(2019, 2, 4), 3), (date(2019, 2, 11), 0)], {1: 4, 3: 1})
        emit_plot_data(tmp_path, *args)
        first = {p.name: p.read_bytes() for p in tmp_path.iterdir()}
        emit_plot_data(tmp_path, *args)
        assert first == {p.name: p.read_bytes() for p in tmp_path.iterdir()}
        assert first["fig8_hist.csv"] == b"events_per_symbol,num_symbols\n1,4\n3,1\n"
        assert first["fig7_weekly.csv"] == b"week_start,count\n2019-02-04,3\n2019-02-11,0\n"
