"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line.

Lines are also collected and repeated in the terminal summary.
"""

import math
import time

import numpy as np

from fixedtime_etc import config as C
from fixedtime_etc.analysis import PAPER_TRIGGER_COUNTS, SettlingBoundInputs, settling_time_bound
from fixedtime_etc.errors import UnboundedFormulaError
from fixedtime_etc.inequalities import young_bound_printed, young_product
from fixedtime_etc.selftest import (
    check_delta_derivative,
    check_delta_floor,
    check_round_trip,
    check_tanh_gap,
    check_young,
    linear_plant_error,
    richardson_ratios,
)
from fixedtime_etc.simulator import run_safely

from .conftest import cached_run

REPORT: list[str] = []
STRATEGIES = ("fixed", "relative", "switched", "self")
SAMPLES = 10_000


def _report(number: int, title: str, ok: bool, detail: str):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}"
    REPORT.append(line)
    print(line)
    assert ok, line


def _timed(name):
    t0 = time.perf_counter()
    res = run_safely(C.preset(name))
    return res, time.perf_counter() - t0


def test_criterion_1_constraint_satisfaction():
    parts, ok = [], True
    for s in STRATEGIES:
        res, dt = _timed(f"paper-sec4-{s}")
        good = res.status == "ok" and res.cycles_completed == 20000 and dt < 1.0
        ok &= good
        parts.append(f"{s}: {res.status} after {res.cycles_completed} cycles, {dt:.2f} s")
    _report(1, "constraint satisfaction", ok, "; ".join(parts))


def test_criterion_2_communication_reduction():
    parts, ok = [], True
    for s in STRATEGIES:
        sm = cached_run(f"paper-sec4-{s}").summary
        hard = sm.status == "ok" and sm.trigger_count <= 2000
        ok &= hard
        target = PAPER_TRIGGER_COUNTS[s]
        soft = abs(sm.trigger_count - target) <= 0.5 * target
        parts.append(
            f"{s}: {sm.count_label()} events over {sm.cycles_completed}/{sm.cycles} cycles"
            f" (published {target}, soft band {'met' if soft else 'missed'})"
        )
    _report(2, "communication reduction", ok, "; ".join(parts))


def test_criterion_3_tracking():
    base = cached_run(C.as_continuous(C.preset("paper-sec4-fixed"))).summary
    e0 = base.max_tracking_error
    ok = base.status == "ok" and e0 <= 0.05
    parts = [f"baseline {base.status}, max error {e0:.4g}"]
    for s in STRATEGIES:
        sm = cached_run(f"paper-sec4-{s}").summary
        e = sm.max_tracking_error
        good = sm.status == "ok" and not math.isnan(e0) and e <= 2 * e0
        ok &= good
        ratio = e / e0 if e0 and not math.isnan(e0) else math.nan
        parts.append(f"{s}: {sm.status}, max error {e:.4g} ({ratio:.3g} x baseline)")
    _report(3, "tracking", ok, "; ".join(parts))


def test_criterion_4_fixed_time_settling():
    ok, parts = True, []
    for s in STRATEGIES:
        entries = []
        for x10 in (-0.5, -0.2, 0.05, 0.5, 1.0):
            sm = cached_run(C.apply_overrides(C.preset(f"paper-sec4-{s}"), [f"x1_0={x10}"])).summary
            good = sm.status == "ok" and sm.band_entry_time <= 5.0
            ok &= good
            entries.append(f"{x10:+g}->{sm.band_entry_time:.3g}" if sm.status == "ok" else f"{x10:+g}->{sm.status}")
        parts.append(f"{s}: " + ", ".join(entries))
    _report(4, "fixed-time behavior", ok, "; ".join(parts))


def test_criterion_5_inequality_suites():
    rng = np.random.default_rng(5)
    lemma3 = check_tanh_gap(rng, SAMPLES)
    young = check_young(rng, SAMPLES)
    printed = young_product(1.0, 1.0, 0.1, 0.1) > young_bound_printed(1.0, 1.0, 0.1, 0.1, 1.0)
    ok = lemma3.passed and young.passed
    _report(
        5, "inequality suites", ok,
        f"tanh gap {lemma3.violations}/{SAMPLES} violations; weighted Young {young.violations}/{SAMPLES} violations"
        f" (printed coefficient layout has a counterexample: {printed})",
    )


def test_criterion_6_mapping_identities():
    rng = np.random.default_rng(6)
    rt = check_round_trip(rng, SAMPLES)
    dd = check_delta_derivative(rng, SAMPLES)
    fl = check_delta_floor(rng, SAMPLES)
    ok = rt.passed and dd.passed and fl.passed
    _report(
        6, "mapping identities", ok,
        f"round trip worst {rt.worst:.2g}, derivative worst {dd.worst:.2g}, floor violations {fl.violations}",
    )


def test_criterion_7_integrator_order():
    ratios = richardson_ratios()
    err = linear_plant_error()
    ok = all(8 <= r <= 32 for r in ratios) and err < 1e-12
    _report(7, "integrator order", ok, f"Richardson ratios {', '.join(f'{r:.2f}' for r in ratios)}; linear error {err:.2g}")


def test_criterion_8_bound_calculators():
    T = settling_time_bound(SettlingBoundInputs(a=1.0, b=1.0, I=0.5, c=0.0, q=2.0, p=0.5))
    try:
        settling_time_bound(SettlingBoundInputs(a=1.0, b=1.0, I=0.5, c=0.0, q=2.0, p=1.5))
        raised = False
    except UnboundedFormulaError:
        raised = True
    _report(8, "bound calculators", T == 6.0 and raised, f"T = {T!r}; p = 1.5 raises: {raised}")


def test_criterion_9_zeno_freeness():
    res = cached_run("paper-sec4-self")
    sm = res.summary
    h = res.config.simulation.step
    floor = sm.zeno_floor
    has_interval = not math.isnan(sm.interval_min)
    ok = sm.status == "ok" and has_interval and floor > 0 and sm.interval_min >= floor - h
    _report(
        9, "Zeno-freeness", ok,
        f"{sm.status}, {sm.trigger_count} events, min interval {sm.interval_min:.4g} s,"
        f" floor {floor:.4g} s (sup|d'| {sm.max_d_rate:.4g})",
    )
