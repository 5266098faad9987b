"""Run metrics, fixed-time bound calculators, Lyapunov diagnostics and
cross-strategy comparison."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import UnboundedFormulaError

# compensation term per strategy, as a multiple of R * Phi
COMPENSATION_FACTORS = {
    "fixed": 0.2785,
    "relative": 0.557,
    "switched": 0.8355,
    "self": 0.557,
}

PAPER_TRIGGER_COUNTS = {"fixed": 439, "relative": 565, "switched": 151 + 347, "self": 798}


@dataclass
class RunSummary:
    name: str
    strategy: str
    status: str = "ok"
    cycles: int = 0
    cycles_completed: int = 0
    trigger_count: int = 0
    branch_counts: dict = field(default_factory=dict)
    interval_min: float = math.nan
    interval_mean: float = math.nan
    interval_max: float = math.nan
    settle_time: float = 5.0
    max_tracking_error: float = math.nan
    band: float = 0.1
    band_entry_time: float = math.nan
    min_constraint_margin: float = math.nan
    diverged: bool = False
    error: str | None = None
    max_d_rate: float = math.nan
    zeno_floor: float = math.nan
    min_scheduled_interval: float = math.nan

    @property
    def completed(self) -> bool:
        return self.status == "ok"

    def count_label(self) -> str:
        if self.strategy == "switched" and self.branch_counts:
            # initial actuation is not a branch event
            return f"{self.branch_counts.get('fixed', 0)}+{self.branch_counts.get('relative', 0)}"
        return str(self.trigger_count)

    def to_text(self) -> str:
        lines = []
        for k, v in asdict(self).items():
            if isinstance(v, dict):
                v = ",".join(f"{kk}:{vv}" for kk, vv in sorted(v.items())) or "-"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        return "\n".join(lines) + "\n"


def band_entry_time(t: np.ndarray, err: np.ndarray, band: float) -> float:
    """Earliest sample time after which |err| stays within ``band``; inf if never."""
    outside = np.flatnonzero(np.abs(err) > band)
    if len(t) == 0:
        return math.nan
    if len(outside) == 0:
        return float(t[0])
    last = outside[-1]
    if last == len(t) - 1:
        return math.inf
    return float(t[last + 1])


def summarize(result) -> RunSummary:
    cfg = result.config
    sim = cfg.simulation
    traj = result.trajectory
    events = result.events
    intervals = np.array([e.interval for e in events if not math.isnan(e.interval)])
    s = RunSummary(
        name=cfg.name,
        strategy=cfg.strategy.kind,
        status=result.status,
        cycles=sim.cycles,
        cycles_completed=result.cycles_completed,
        trigger_count=len(events),
        branch_counts=dict(result.trigger.branch_counts),
        settle_time=sim.settle_time,
        band=sim.band,
        min_constraint_margin=float(result.min_margin) if math.isfinite(result.min_margin) else math.nan,
        diverged=result.status == "diverged",
        error=result.error,
    )
    if len(intervals):
        s.interval_min = float(intervals.min())
        s.interval_mean = float(intervals.mean())
        s.interval_max = float(intervals.max())
    if len(traj):
        t = traj["t"]
        err = traj["y"] - traj["x_r"]
        tail = t >= sim.settle_time - 1e-12
        if result.status == "ok" and tail.any():
            s.max_tracking_error = float(np.max(np.abs(err[tail])))
        if result.status == "ok":
            s.band_entry_time = band_entry_time(t, err, sim.band)
    if cfg.strategy.kind == "self":
        st = cfg.strategy
        s.max_d_rate = result.trigger.max_d_rate
        s.zeno_floor = st.offset / max(result.trigger.max_d_rate, st.rate_floor)
        s.min_scheduled_interval = result.trigger.min_scheduled_interval
    return s


# --------------------------------------------------------------------------
# fixed-time bounds


@dataclass(frozen=True)
class SettlingBoundInputs:
    """Constants of dV/dt <= -a V^q - b V^p + c.

    a = pi/(n+1)^q and b = pi with pi = min{2^q k1_o, 2^p k2_o, tau_o};
    see :func:`fixed_time_rates`. ``I`` is the free fraction in (0, 1).
    """

    a: float
    b: float
    I: float
    c: float
    q: float
    p: float


def settling_time_bound(inputs: SettlingBoundInputs) -> float:
    """T <= 1/(a I (q-1)) + 1/(b I (1-p))."""
    a, b, I, q, p = inputs.a, inputs.b, inputs.I, inputs.q, inputs.p
    if not p < 1:
        raise UnboundedFormulaError(f"p={p} >= 1: the settling-time formula has no finite value")
    if not q > 1:
        raise UnboundedFormulaError(f"q={q} <= 1: the settling-time formula has no finite value")
    if not (a > 0 and b > 0):
        raise UnboundedFormulaError("a and b must be positive")
    if not 0 < I < 1:
        raise UnboundedFormulaError(f"I={I} must lie in (0, 1)")
    return 1.0 / (a * I * (q - 1.0)) + 1.0 / (b * I * (1.0 - p))


def tracking_radius_bound(inputs: SettlingBoundInputs) -> float:
    """|y - y_ref| <= 2 (c / ((1 - I) a))^(1/(2q))."""
    a, I, c, q = inputs.a, inputs.I, inputs.c, inputs.q
    if not c >= 0:
        raise ValueError("c must be nonnegative")
    if not 0 < I < 1:
        raise ValueError("I must lie in (0, 1)")
    if not a > 0:
        raise ValueError("a must be positive")
    if not q > 0:
        raise ValueError("q must be positive")
    return 2.0 * (c / ((1.0 - I) * a)) ** (1.0 / (2.0 * q))


def residual_level(inputs: SettlingBoundInputs) -> float:
    """min{(c/((1-I)a))^(1/q), (c/((1-I)b))^(1/p)}: the level V is driven below."""
    a, b, I, c, q, p = inputs.a, inputs.b, inputs.I, inputs.c, inputs.q, inputs.p
    return min((c / ((1 - I) * a)) ** (1 / q), (c / ((1 - I) * b)) ** (1 / p))


def fixed_time_rates(k1: Sequence[float], k2: Sequence[float], tau: Sequence[float], p: float, q: float) -> tuple[float, float]:
    """(a, b) from the gains."""
    n = len(k1)
    pi = min([2.0**q * k for k in k1] + [2.0**p * k for k in k2] + list(tau))
    return pi / (n + 1) ** q, pi


def compensation_constant(strategy: str, R: float, Phi: float) -> float:
    return COMPENSATION_FACTORS[strategy] * R * Phi


def residual_constant(
    u: Sequence[float],
    lam: Sequence[float],
    f: Sequence[float],
    tau: Sequence[float],
    phi_tilde: Sequence[float],
    p: float,
    compensation: float,
) -> float:
    """c_1 = sum(u^2/2 + lam^2/2 + f tau phi~^2 / 2) + (1-p) p^(p/(1-p)) + Lambda.

    Every argument is an analysis constant the user must supply; none is
    estimated from a run.
    """
    if not 0 < p < 1:
        raise UnboundedFormulaError(f"p={p} outside (0, 1)")
    s = sum(uo**2 / 2 + lo**2 / 2 + fo * to * ph**2 / 2 for uo, lo, fo, to, ph in zip(u, lam, f, tau, phi_tilde))
    return s + (1 - p) * p ** (p / (1 - p)) + compensation


def residual_constant_with_bound(c1: float, gamma: Sequence[float], eps: Sequence[float], tau: Sequence[float], q: float) -> float:
    """Add the estimation-error excess when some gamma_o >= sqrt(2 eps_o)."""
    if all(g < math.sqrt(2 * e) for g, e in zip(gamma, eps)):
        return c1
    return c1 + sum(t * (g * g / (2 * e)) ** q - t * g * g / (2 * e) for g, e, t in zip(gamma, eps, tau))


# --------------------------------------------------------------------------
# Lyapunov surrogate


@dataclass
class LyapunovDiagnostic:
    t: np.ndarray
    V: np.ndarray
    residual: float
    window: int
    violations: int

    @property
    def decreasing_outside_residual(self) -> bool:
        return self.violations == 0

    def remains_below(self, t0: float) -> bool:
        """V(t) <= V(t0) for every sample t >= t0."""
        idx = int(np.searchsorted(self.t, t0 - 1e-12))
        if idx >= len(self.V):
            return False
        return bool(np.all(self.V[idx:] <= self.V[idx]))


def lyapunov_surrogate(z: np.ndarray, phi_hat: np.ndarray, eps: Sequence[float]) -> np.ndarray:
    """sum z_o^2/2 + sum phi_hat_o^2/(2 eps_o), row-wise."""
    z = np.atleast_2d(z)
    phi_hat = np.atleast_2d(phi_hat)
    e = np.asarray(eps, dtype=float)
    return 0.5 * np.sum(z * z, axis=1) + np.sum(phi_hat * phi_hat / (2.0 * e), axis=1)


def lyapunov_diagnostic(traj, eps: Sequence[float], tail_fraction: float = 0.5, window: int | None = None) -> LyapunovDiagnostic:
    """Surrogate V(t) with phi_hat in place of the unknown estimation error.

    The residual level is the maximum of V over the final ``tail_fraction``
    of the run; every window starting above it must end lower.
    """
    try:
        z = traj.block("z")
        ph = traj.block("phi_hat")
        t = traj["t"]
    except KeyError as exc:
        raise ValueError(f"trajectory lacks column {exc}") from None
    V = lyapunov_surrogate(z, ph, eps)
    m = len(V)
    if m == 0:
        return LyapunovDiagnostic(t, V, math.nan, 0, 0)
    start = int(m * (1.0 - tail_fraction))
    residual = float(V[start:].max())
    w = window or max(1, m // 100)
    starts = np.arange(0, m - w)
    above = starts[V[starts] > residual]
    violations = int(np.count_nonzero(V[above + w] >= V[above]))
    return LyapunovDiagnostic(t, V, residual, w, violations)


# --------------------------------------------------------------------------
# comparison


@dataclass
class ComparisonRow:
    name: str
    strategy: str
    count: str
    total: int
    interval_min: float
    interval_mean: float
    interval_max: float
    max_tracking_error: float
    status: str
    delta_count: int = 0
    delta_error: float = 0.0


@dataclass
class ComparisonReport:
    rows: list[ComparisonRow]
    checks: dict[str, bool | None]

    COLUMNS = (
        "name", "strategy", "count", "total", "interval_min", "interval_mean", "interval_max",
        "max_tracking_error", "status", "delta_count", "delta_error",
    )

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.COLUMNS)
        for r in self.rows:
            w.writerow([getattr(r, c) if not isinstance(getattr(r, c), float) else repr(getattr(r, c)) for c in self.COLUMNS])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_text(self) -> str:
        def fmt(v):
            if isinstance(v, float):
                return "nan" if math.isnan(v) else f"{v:.6g}"
            return str(v)

        table = [list(self.COLUMNS)] + [[fmt(getattr(r, c)) for c in self.COLUMNS] for r in self.rows]
        widths = [max(len(row[j]) for row in table) for j in range(len(self.COLUMNS))]
        lines = ["  ".join(cell.ljust(wd) for cell, wd in zip(row, widths)).rstrip() for row in table]
        lines.insert(1, "  ".join("-" * wd for wd in widths))
        lines.append("")
        for k, v in self.checks.items():
            lines.append(f"{k}: {'n/a' if v is None else ('yes' if v else 'no')}")
        return "\n".join(lines) + "\n"


# tracking-accuracy order reported for the four strategies, best first
PAPER_ACCURACY_ORDER = ("relative", "switched", "fixed", "self")


def compare_strategies(summaries: Sequence[RunSummary]) -> ComparisonReport:
    """Tabulate counts, intervals and tracking errors; evaluate (not enforce) the
    orderings claimed for the strategies. Deltas are against the first row."""
    if len(summaries) < 2:
        raise ValueError("need at least two summaries to compare")
    base = summaries[0]
    rows = []
    for s in summaries:
        rows.append(
            ComparisonRow(
                s.name, s.strategy, s.count_label(), s.trigger_count, s.interval_min, s.interval_mean,
                s.interval_max, s.max_tracking_error, s.status,
                s.trigger_count - base.trigger_count,
                s.max_tracking_error - base.max_tracking_error
                if not (math.isnan(s.max_tracking_error) and math.isnan(base.max_tracking_error)) else 0.0,
            )
        )
    checks: dict[str, bool | None] = {}
    done = [s for s in summaries if s.completed]
    checks["all runs completed"] = len(done) == len(summaries)
    ran = [s for s in summaries if s.cycles > 0]
    checks["every count below cycle count"] = all(s.trigger_count < s.cycles for s in ran) if ran else None
    by_kind = {s.strategy: s for s in done}
    if all(k in by_kind and not math.isnan(by_kind[k].max_tracking_error) for k in PAPER_ACCURACY_ORDER):
        errs = [by_kind[k].max_tracking_error for k in PAPER_ACCURACY_ORDER]
        checks["accuracy order relative > switched > fixed > self"] = all(a <= b for a, b in zip(errs, errs[1:]))
        counts = [by_kind[k].trigger_count for k in PAPER_ACCURACY_ORDER]
        order_e = np.argsort(errs)
        order_c = np.argsort(-np.asarray(counts))
        checks["more triggers means better tracking"] = bool(np.array_equal(order_e, order_c))
    else:
        checks["accuracy order relative > switched > fixed > self"] = None
        checks["more triggers means better tracking"] = None
    return ComparisonReport(rows, checks)


def paper_table_summaries() -> list[RunSummary]:
    """Published trigger counts as summaries (switched split 151 fixed + 347 relative)."""
    out = []
    for kind in ("fixed", "relative", "switched", "self"):
        s = RunSummary(name=f"paper-{kind}", strategy=kind, cycles=20000, cycles_completed=20000)
        s.trigger_count = PAPER_TRIGGER_COUNTS[kind]
        if kind == "switched":
            s.branch_counts = {"fixed": 151, "relative": 347}
        out.append(s)
    return out


# --------------------------------------------------------------------------
# plots


def write_plots(result, outdir) -> list[Path]:
    """Static SVGs: tracking (x and w), actuated control, inter-event intervals."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "fixedtime-etc"
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    traj = result.trajectory
    name = result.config.name
    paths = []
    t = traj["t"]

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
    ax1.plot(t, traj["y"], label="y")
    ax1.plot(t, traj["x_r"], "--", label="x_r")
    ax1.set_ylabel("output")
    ax1.legend()
    ax2.plot(t, traj["w1"], label="w1")
    ax2.plot(t, traj["w_s"], "--", label="w_s")
    ax2.set_ylabel("mapped")
    ax2.set_xlabel("t [s]")
    ax2.legend()
    fig.suptitle(name)
    paths.append(outdir / f"{name}_tracking.svg")
    fig.savefig(paths[-1], metadata={"Date": None})
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 3))
    ax.step(t, traj["g_held"], where="post", label="g (held)")
    ax.plot(t, traj["d"], alpha=0.5, label="d")
    ax.set_xlabel("t [s]")
    ax.legend()
    paths.append(outdir / f"{name}_control.svg")
    fig.savefig(paths[-1], metadata={"Date": None})
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 3))
    ev = [e for e in result.events if not math.isnan(e.interval)]
    if ev:
        ax.stem([e.time for e in ev], [e.interval for e in ev])
    ax.set_xlabel("t [s]")
    ax.set_ylabel("inter-event interval [s]")
    paths.append(outdir / f"{name}_intervals.svg")
    fig.savefig(paths[-1], metadata={"Date": None})
    plt.close(fig)
    return paths
