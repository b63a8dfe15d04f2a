import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from pumpstudy.errors import DegenerateRegressorError, InsufficientEventsError, SingularDesignError
from pumpstudy.eventstudy import AbnormalPanel, TrainingStats
from pumpstudy.regression import (
    ColumnFailure,
    RegressionResult,
    ols,
    run_table3,
    significance_stars,
    standardize,
    write_results_csv,
)
from pumpstudy.timeseries import MinuteSeries


def normal_equations(y, X):
    """Exact rational solution of X'X b = X'y by Gauss-Jordan elimination."""
    X = [[Fraction(float(v)) for v in row] for row in X]
    y = [Fraction(float(v)) for v in y]
    k = len(X[0])
    A = [[sum(X[r][i] * X[r][j] for r in range(len(X))) for j in range(k)] for i in range(k)]
    b = [sum(X[r][i] * y[r] for r in range(len(X))) for i in range(k)]
    for c in range(k):
        piv = next(r for r in range(c, k) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        b[c], b[piv] = b[piv], b[c]
        for r in range(k):
            if r != c and A[r][c] != 0:
                f = A[r][c] / A[c][c]
                A[r] = [a - f * p for a, p in zip(A[r], A[c])]
                b[r] -= f * b[c]
    return [float(b[i] / A[i][i]) for i in range(k)]


def design(x):
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    return np.column_stack([np.ones(len(x)), x])


class TestStandardize:
    def test_two_points(self):
        assert standardize([1, 3]) == pytest.approx([-1 / math.sqrt(2), 1 / math.sqrt(2)], abs=1e-12)

    def test_idempotent(self):
        z = standardize(np.random.default_rng(0).normal(size=50))
        assert np.allclose(standardize(z), z, atol=1e-12)
        assert abs(z.mean()) < 1e-12 and abs(z.std(ddof=1) - 1) < 1e-12

    def test_constant(self):
        with pytest.raises(DegenerateRegressorError, match="CAV"):
            standardize([2.0, 2.0, 2.0], "CAV(-1,1)")


class TestOLS:
    def test_perfect_fit(self):
        x = np.arange(10.0)
        res = ols(2 * x, design(x), ["Intercept", "x"])
        assert res.coef("x") == pytest.approx(2.0, abs=1e-12)
        assert res.rss == pytest.approx(0.0, abs=1e-20)
        assert res.adj_r2 == pytest.approx(1.0)
        assert res.se("x") == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed(self):
        res = ols([1, 2, 4], design([0, 1, 2]))
        assert res.coefficients[1] == pytest.approx(1.5, abs=1e-9)
        assert res.coefficients[0] == pytest.approx(5 / 6, abs=1e-9)
        # residuals (1/6, -1/3, 1/6): RSS = 1/6, s^2 = 1/6, var(slope) = s^2 / Sxx = 1/12
        assert res.standard_errors[1] == pytest.approx(math.sqrt(1 / 12), abs=1e-12)
        t = 1.5 / math.sqrt(1 / 12)
        assert res.p_values[1] == pytest.approx(2 * sps.t.sf(t, 1), abs=1e-12)
        # R^2 = 1 - (1/6) / (14/3)
        r2 = 1 - (1 / 6) / (14 / 3)
        assert res.adj_r2 == pytest.approx(1 - (1 - r2) * 2 / 1, abs=1e-12)

    def test_null_regressor(self):
        rng = np.random.default_rng(20240101)
        x, y = rng.normal(size=1000), rng.normal(size=1000)
        res = ols(y, design(x))
        assert res.p_values[1] > 0.01
        assert abs(res.adj_r2) < 0.01
        assert res.adj_r2 <= res.r2

    def test_negative_adj_r2_is_allowed(self):
        rng = np.random.default_rng(1)
        res = ols(rng.normal(size=30), design(rng.normal(size=(30, 3))))
        assert res.adj_r2 < res.r2

    def test_singular_design_lists_columns(self):
        x = np.arange(10.0)
        with pytest.raises(SingularDesignError) as err:
            ols(x, np.column_stack([np.ones(10), x, 2 * x]), ["Intercept", "a", "b"])
        assert err.value.columns == ["b"]

    def test_robust_errors_differ_under_heteroskedasticity(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=400)
        y = x + rng.normal(size=400) * (1 + 3 * np.abs(x))
        classical = ols(y, design(x))
        robust = ols(y, design(x), robust=True)
        assert np.array_equal(classical.coefficients, robust.coefficients)
        # HC1 by hand
        X = design(x)
        e = y - X @ classical.coefficients
        inv = np.linalg.inv(X.T @ X)
        cov = inv @ (X.T * e**2) @ X @ inv * 400 / 398
        assert robust.standard_errors == pytest.approx(np.sqrt(np.diag(cov)), rel=1e-9)
        assert robust.standard_errors[1] > classical.standard_errors[1]

    @settings(max_examples=150, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 4))
    def test_matches_normal_equations(self, seed, p):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(p + 2, 51))
        X = design(rng.normal(size=(n, p)))
        y = X @ rng.normal(size=p + 1) + rng.normal(size=n)
        res = ols(y, X)
        assert np.max(np.abs(res.coefficients - normal_equations(y, X))) < 1e-9
        e = y - X @ res.coefficients
        assert np.max(np.abs(X.T @ e)) < 1e-8
        assert res.adj_r2 <= res.r2
        assert np.all((res.p_values >= 0) & (res.p_values <= 1))


class TestStars:
    @pytest.mark.parametrize("p,stars", [(0.005, "***"), (0.01, "**"), (0.03, "**"), (0.07, "*"), (0.1, ""), (0.5, "")])
    def test_levels(self, p, stars):
        assert significance_stars(p) == stars

    @given(st.floats(0, 1), st.floats(0, 1))
    def test_monotone(self, p, q):
        if p <= q:
            assert len(significance_stars(p)) >= len(significance_stars(q))


def make_panels(n, seed=0, beta=0.5, undefined=0):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        at = rng.normal(0, 1, 1441)
        ar = rng.normal(0, 0.002, 1441)
        late = slice(720 - 31, 720 - 1)  # taus -31..-2
        ar[late] += beta * at[late].sum() / 100 / 30 / 5
        av = rng.normal(0, 3, 1441)
        g = lambda v: MinuteSeries.full(-720, v)
        st_ = TrainingStats(0.0, 0.0, 0.0, 0.0 if i < undefined else 1.0, 2160)
        out.append(AbnormalPanel(f"e{i:03d}", g(ar), g(av), g(at), st_, i >= undefined))
    return out


class TestTable3:
    def test_five_columns(self):
        res = run_table3(make_panels(60, undefined=3))
        assert [r.name for r in res] == ["(1)", "(2)", "(3)", "(4)", "(5)"]
        assert [len(r.terms) for r in res] == [2, 2, 7, 2, 10]
        assert res[0].dependent == "CAR(-31,-2)" and res[4].dependent == "CAR(32,720)"
        assert res[4].terms[1:4] == ["CAT(-31,-2)", "CAT(-1,1)", "CAT(2,31)"]
        assert all(r.n == 57 and r.dropped_events == 3 for r in res)

    def test_too_few(self):
        with pytest.raises(InsufficientEventsError, match="insufficient"):
            run_table3(make_panels(25, undefined=6))

    def test_degenerate_column_isolated(self):
        panels = make_panels(30)
        # identical abnormal volume everywhere makes CAV constant across events
        flat = MinuteSeries.full(-720, np.ones(1441))
        panels = [AbnormalPanel(p.event_id, p.ar, flat, p.at, p.training, True) for p in panels]
        res = run_table3(panels)
        assert isinstance(res[2], ColumnFailure) and "zero variance" in res[2].error
        assert isinstance(res[0], RegressionResult) and isinstance(res[3], RegressionResult)

    def test_policies_share_tweet_and_volume_t_stats(self):
        panels = make_panels(80, seed=4)
        a = run_table3(panels, policy="car-raw")
        b = run_table3(panels, policy="dep-raw")
        for ra, rb in zip(a, b):
            for term in ra.terms:
                if term.startswith(("CAT", "CAV")):
                    assert ra.t(term) == pytest.approx(rb.t(term), abs=1e-9)
        # raw CAR regressors differ from their z-scored version only by scale
        assert a[2].coef("CAR(-1,1)") != pytest.approx(b[2].coef("CAR(-1,1)"))
        assert a[2].t("CAR(-1,1)") == pytest.approx(b[2].t("CAR(-1,1)"), abs=1e-9)

    def test_panel_order_irrelevant(self):
        panels = make_panels(40, seed=9)
        a = run_table3(panels)
        b = run_table3(panels[::-1])
        for ra, rb in zip(a, b):
            assert np.array_equal(ra.coefficients, rb.coefficients)

    def test_results_csv(self, tmp_path):
        res = run_table3(make_panels(30))
        write_results_csv(tmp_path / "r.csv", res)
        lines = (tmp_path / "r.csv").read_text().splitlines()
        assert lines[0] == "column,term,coef,se,t,p,stars"
        assert len(lines) == 1 + 2 + 2 + 7 + 2 + 10


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e-3, 1e3))
def test_regressor_rescaling_invariance(seed, c):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=40)
    y = 0.3 * x + rng.normal(size=40)
    a = ols(y, design(standardize(x)))
    b = ols(y, design(standardize(c * x)))
    assert a.coefficients[1] == pytest.approx(b.coefficients[1], abs=1e-9)
    assert a.t_stats[1] == pytest.approx(b.t_stats[1], abs=1e-9)
    assert a.p_values[1] == pytest.approx(b.p_values[1], abs=1e-9)
