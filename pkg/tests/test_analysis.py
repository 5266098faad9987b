import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fixedtime_etc import config as C
from fixedtime_etc.analysis import (
    RunSummary,
    SettlingBoundInputs,
    band_entry_time,
    compare_strategies,
    compensation_constant,
    fixed_time_rates,
    lyapunov_diagnostic,
    lyapunov_surrogate,
    paper_table_summaries,
    residual_constant,
    residual_level,
    settling_time_bound,
    tracking_radius_bound,
    write_plots,
)
from fixedtime_etc.errors import UnboundedFormulaError
from fixedtime_etc.simulator import Trajectory, run


def B(**kw):
    base = dict(a=1.0, b=1.0, I=0.5, c=0.0, q=2.0, p=0.5)
    base.update(kw)
    return SettlingBoundInputs(**base)


def test_settling_time_plug_in():
    assert settling_time_bound(B()) == 6.0


@pytest.mark.parametrize("kw", [{"p": 1.5}, {"p": 1.0}, {"q": 1.0}, {"q": 0.9}, {"a": 0.0}, {"I": 1.0}])
def test_settling_time_rejections(kw):
    with pytest.raises(UnboundedFormulaError):
        settling_time_bound(B(**kw))


@given(st.floats(0.01, 0.98), st.floats(0.001, 0.01))
def test_settling_time_decreases_in_I(I, dI):
    assert settling_time_bound(B(I=I + dI)) < settling_time_bound(B(I=I))


def test_tracking_radius_examples():
    assert tracking_radius_bound(B(c=0.0)) == 0.0
    assert tracking_radius_bound(B(c=0.5, q=1.0)) == pytest.approx(2.0, rel=1e-15)
    with pytest.raises(ValueError):
        tracking_radius_bound(B(c=-1.0))
    with pytest.raises(ValueError):
        tracking_radius_bound(B(c=1.0, I=0.0))


@given(st.floats(0, 100), st.floats(0.001, 10), st.floats(0.1, 10))
def test_tracking_radius_monotone_in_c(c, dc, a):
    assert tracking_radius_bound(B(c=c + dc, a=a)) > tracking_radius_bound(B(c=c, a=a))


def test_rates_from_gains():
    a, b = fixed_time_rates([800.0, 19.0], [800.0, 19.0], [10.0, 10.0], 0.75, 1.05)
    assert b == 10.0
    assert a == pytest.approx(10.0 / 3**1.05, rel=1e-15)
    # min{2^2 * 1, 2^0.5 * 3, 10} = 4 from the first gain
    a, b = fixed_time_rates([1.0], [3.0], [10.0], 0.5, 2.0)
    assert b == 4.0 and a == 1.0


def test_compensation_table():
    assert compensation_constant("fixed", 2.0, 10.0) == pytest.approx(5.57)
    assert compensation_constant("relative", 1.0, 1.0) == 0.557
    assert compensation_constant("switched", 1.0, 1.0) == 0.8355
    assert compensation_constant("self", 1.0, 1.0) == 0.557


def test_residual_constant_and_level():
    c1 = residual_constant([1.0], [0.0], [6.0], [10.0], [0.0], 0.5, 0.0)
    assert c1 == pytest.approx(0.5 + 0.5 * 0.5)
    with pytest.raises(UnboundedFormulaError):
        residual_constant([1.0], [0.0], [6.0], [10.0], [0.0], 1.5, 0.0)
    assert residual_level(B(c=0.5)) == pytest.approx(min(1.0, 1.0))


def test_band_entry_time():
    t = np.arange(6.0)
    assert band_entry_time(t, np.array([1, 1, 0.05, 0.2, 0.0, 0.0]), 0.1) == 4.0
    assert band_entry_time(t, np.zeros(6), 0.1) == 0.0
    assert band_entry_time(t, np.array([0, 0, 0, 0, 0, 1.0]), 0.1) == math.inf
    assert math.isnan(band_entry_time(np.array([]), np.array([]), 0.1))


def _fake_traj(z, ph):
    z, ph = np.atleast_2d(z), np.atleast_2d(ph)
    n = z.shape[1]
    tr = Trajectory(n, len(z))
    for k in range(len(z)):
        row = np.zeros(len(tr.columns))
        row[0] = k * 1e-3
        row[tr.index["z1"]: tr.index["z1"] + n] = z[k]
        row[tr.index["phi_hat1"]: tr.index["phi_hat1"] + n] = ph[k]
        tr.append(row)
    return tr


def test_surrogate_zero_and_scaling():
    tr = _fake_traj(np.zeros((20, 2)), np.zeros((20, 2)))
    d = lyapunov_diagnostic(tr, [1.2, 1.5])
    assert np.all(d.V == 0.0)
    z = np.random.default_rng(3).normal(size=(10, 2))
    base = lyapunov_surrogate(z, np.zeros_like(z), [1.2, 1.5])
    assert np.allclose(lyapunov_surrogate(2 * z, np.zeros_like(z), [1.2, 1.5]), 4 * base, rtol=1e-15)


@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_surrogate_nonnegative_and_zero_only_at_origin(v):
    V = lyapunov_surrogate(np.array([v[:2]]), np.array([v[2:]]), [1.1, 1.2])[0]
    assert V >= 0
    if any(abs(x) > 1e-100 for x in v):
        assert V > 0
    if all(x == 0 for x in v):
        assert V == 0


def test_surrogate_missing_columns():
    class Bare:
        def block(self, name):
            raise KeyError(name)

        def __getitem__(self, name):
            raise KeyError(name)

    with pytest.raises(ValueError):
        lyapunov_diagnostic(Bare(), [1.0])


def test_decaying_surrogate_is_monotone_outside_residual():
    t = np.arange(2000)
    z = np.column_stack([np.exp(-t / 200.0), 0.5 * np.exp(-t / 100.0)])
    d = lyapunov_diagnostic(_fake_traj(z, np.zeros_like(z)), [1.2, 1.2])
    assert d.decreasing_outside_residual
    assert d.remains_below(0.5)


def test_demo_surrogate_decreases_outside_residual(run_cached):
    res = run_cached("demo-continuous")
    d = lyapunov_diagnostic(res.trajectory, res.config.controller.eps)
    assert d.decreasing_outside_residual


def test_sec4_continuous_surrogate_stays_below_five_second_level(run_cached):
    """On the experiment plant the surrogate enters and stays below its t = 5 s level."""
    res = run_cached("paper-sec4-continuous")
    assert res.status == "ok", res.error
    d = lyapunov_diagnostic(res.trajectory, res.config.controller.eps)
    assert d.remains_below(5.0)


def test_published_counts_table():
    rep = compare_strategies(paper_table_summaries())
    assert [r.count for r in rep.rows] == ["439", "565", "151+347", "798"]
    assert [r.total for r in rep.rows] == [439, 565, 498, 798]
    assert rep.checks["every count below cycle count"]
    text = rep.to_text()
    assert "151+347" in text
    assert rep.to_csv().splitlines()[0].startswith("name,strategy,count,total")


def test_duplicate_summaries_give_zero_deltas():
    s = RunSummary(name="a", strategy="fixed", cycles=100, trigger_count=7, max_tracking_error=0.02)
    rep = compare_strategies([s, s])
    assert all(r.delta_count == 0 and r.delta_error == 0 for r in rep.rows)


def test_compare_needs_two():
    with pytest.raises(ValueError):
        compare_strategies([RunSummary(name="a", strategy="fixed")])


def test_accuracy_ordering_is_reported_not_enforced():
    errs = {"relative": 0.01, "switched": 0.02, "fixed": 0.03, "self": 0.04}
    counts = {"relative": 500, "switched": 400, "fixed": 300, "self": 200}
    ss = [RunSummary(name=k, strategy=k, cycles=1000, trigger_count=counts[k], max_tracking_error=v) for k, v in errs.items()]
    rep = compare_strategies(ss)
    assert rep.checks["accuracy order relative > switched > fixed > self"] is True
    assert rep.checks["more triggers means better tracking"] is True
    ss[0].max_tracking_error = 0.5
    assert compare_strategies(ss).checks["accuracy order relative > switched > fixed > self"] is False


def test_summary_text_block(run_cached):
    s = run_cached("demo-switched").summary
    lines = dict(line.split(" = ", 1) for line in s.to_text().splitlines())
    assert lines["strategy"] == "switched"
    assert int(lines["trigger_count"]) == s.trigger_count
    assert s.count_label() == f"{s.branch_counts['fixed']}+{s.branch_counts['relative']}"
    assert 0 < s.interval_min <= s.interval_mean <= s.interval_max
    assert s.trigger_count <= s.cycles


def test_summary_of_self_triggered_reports_floor(run_cached):
    s = run_cached("demo-self").summary
    assert s.zeno_floor > 0
    assert s.interval_min >= s.zeno_floor - 1e-3


def test_plots_are_reproducible(tmp_path):
    res = run(C.apply_overrides(C.preset("demo-fixed"), ["duration=0.2"]))
    a = [p.read_bytes() for p in write_plots(res, tmp_path / "a")]
    b = [p.read_bytes() for p in write_plots(res, tmp_path / "b")]
    assert len(a) == 3 and a == b
    assert a[0].lstrip().startswith(b"<?xml")
