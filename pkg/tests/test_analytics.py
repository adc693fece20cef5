import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import multiplicative
from ctreserve.analytics import comparison_table, histogram, parametric_quantile, quantile, summarize
from ctreserve.bootstrap import BootstrapConfig, fit_parametric, run_bootstrap

samples_st = st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=200).map(np.array)


def test_constant_samples():
    s = summarize(np.full(50, 123.0), 123.0)
    assert s.msep_pct == 0.0
    assert all(v == 123.0 for v in s.quantiles.values())
    assert s.q995_excess_pct == 0.0


def test_median_odd():
    assert quantile([5, 1, 4, 2, 3], 0.5) == 3.0
    assert summarize(np.array([1.0, 2, 3, 4, 5]), 3.0, probs=[0.5]).quantiles[0.5] == 3.0


def test_type7_interpolation():
    # h = (N - 1) p + 1 = 2.5 on {10, 20, 30, 40}
    assert quantile([40, 10, 30, 20], 0.5) == 25.0
    assert quantile([40, 10, 30, 20], 0.995) == pytest.approx(30 + 0.985 * 10)


def test_summary_rejects_bad_input():
    with pytest.raises(ValueError):
        summarize(np.array([]), 1.0)
    with pytest.raises(ValueError):
        summarize(np.array([1.0]), 0.0)


@settings(max_examples=100, deadline=None)
@given(samples_st)
def test_sd_two_pass(x):
    s = summarize(x, 1.0, bins=None)
    m = sum(x) / len(x)
    var = sum((v - m) ** 2 for v in x) / (len(x) - 1)
    assert s.sd**2 == pytest.approx(var, rel=1e-12, abs=1e-300)


@settings(max_examples=100, deadline=None)
@given(samples_st, st.lists(st.floats(0.001, 0.999), min_size=2, max_size=8))
def test_quantiles_monotone_and_bounded(x, probs):
    probs = sorted(probs)
    q = quantile(x, probs)
    assert np.all(np.diff(q) >= 0)
    assert np.all(q >= x.min()) and np.all(q <= x.max())


@settings(max_examples=100, deadline=None)
@given(samples_st, st.floats(0.01, 100.0), st.floats(-1e3, 1e3), st.floats(0.01, 0.99))
def test_quantile_affine_equivariance(x, a, b, p):
    assert quantile(a * x + b, p) == pytest.approx(a * quantile(x, p) + b, rel=1e-9, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(samples_st, st.integers(1, 60))
def test_histogram_conserves_mass(x, k):
    h = histogram(x, k)
    assert h.counts.sum() == x.size
    assert h.edges[0] <= x.min() and h.edges[-1] >= x.max()


def test_histogram_edges_and_errors():
    x = np.arange(10.0)
    assert histogram(x, 1).counts.tolist() == [10]
    h = histogram(x, [0, 5, 10])
    assert h.counts.tolist() == [5, 5]
    for bad in (0, -2, 2.5, [3, 1], [1]):
        with pytest.raises(ValueError):
            histogram(x, bad)


def test_histogram_constant():
    h = histogram(np.full(20, 7.0), 5)
    assert h.counts.sum() == 20 and h.counts.max() == 20
    k = int(np.argmax(h.counts))
    assert h.edges[k] <= 7.0 <= h.edges[k + 1]


def test_parametric_quantiles(taylor_ashe, mortgage):
    ln = fit_parametric(taylor_ashe, "lognormal")
    assert parametric_quantile(ln, 0.5) == pytest.approx(np.exp(ln.params["mu_log"]), rel=1e-14)
    for t, ln_pct, g_pct in ((taylor_ashe, 38.7466, 36.95), (mortgage, 85.5185, 78.2503)):
        ln = fit_parametric(t, "lognormal")
        g = fit_parametric(t, "gamma")
        assert 100 * (parametric_quantile(ln, 0.995) / ln.mu_R - 1) == pytest.approx(ln_pct, abs=1e-4)
        assert 100 * (parametric_quantile(g, 0.995) / g.mu_R - 1) == pytest.approx(g_pct, abs=5e-3)
    with pytest.raises(ValueError):
        parametric_quantile(ln, 1.0)


def test_comparison_layout(taylor_ashe):
    rows, results = comparison_table(taylor_ashe, M=5000, seed=1)
    assert [r["method"] for r in rows] == [
        "Mack Log-normal",
        "Mack Bootstrap",
        "Time series Bootstrap",
        "Continuous-time Bootstrap",
    ]
    assert round(rows[0]["msep_pct"], 4) == 13.0995
    assert round(rows[0]["q995_excess_pct"], 4) == 38.7466
    assert set(results) == {"mack_residual", "time_series", "ct"}


def test_comparison_mortgage_parametric_row(mortgage):
    rows, _ = comparison_table(mortgage, M=2000, seed=1)
    assert round(rows[0]["msep_pct"], 4) == 25.6337
    assert round(rows[0]["q995_excess_pct"], 4) == 85.5185


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_comparison_degenerate():
    rows, results = comparison_table(multiplicative(), M=500, seed=1)
    assert len(rows) == 4
    for r in rows:
        assert r["msep_pct"] == 0.0 and r["q995_excess_pct"] == pytest.approx(0.0, abs=1e-12)
    assert results["mack_residual"] is None


@pytest.mark.slow
def test_ct_and_ts_histograms_overlap(taylor_ashe):
    a = run_bootstrap(taylor_ashe, BootstrapConfig(method="ct", M=100_000, seed=5)).samples
    b = run_bootstrap(taylor_ashe, BootstrapConfig(method="time_series", M=100_000, seed=6)).samples
    lo, hi = min(a.min(), b.min()), max(a.max(), b.max())
    edges = np.linspace(lo, hi, 101)
    ha, hb = histogram(a, edges).density(), histogram(b, edges).density()
    assert np.abs(ha - hb).sum() < 0.05
