"""Fixed-step closed-loop simulation.

Each cycle: evaluate the laws at the sample, update the trigger runtime, then
integrate plant states and adaptive estimates jointly with classic RK4 while
the actuated input is held constant. A state leaving its open box aborts the
run; nothing is clamped.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .backstepping import BacksteppingController, ControlComputation, regressor_dim
from .config import ExperimentConfig, apply_overrides, from_dict, initial_state_check, to_dict
from .errors import (
    ConfigError,
    ConstraintViolation,
    ConstraintViolationError,
    DivergenceError,
    FixedTimeEtcError,
    MappingSaturation,
    SimulationError,
)
from .mapping import ASYMMETRIC, map_reference
from .plants import PlantModel, Reference, build_plant, build_reference
from .rbf import RbfNetwork, lattice_centers
from .trigger import EventRecord, TriggerState, adaptive_signal, step_trigger_runtime


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, h: float, k1=None) -> np.ndarray:
    """One classic fourth-order Runge-Kutta step; ``k1`` may be supplied if known."""
    if k1 is None:
        k1 = f(t, y)
    k2 = f(t + 0.5 * h, y + 0.5 * h * k1)
    k3 = f(t + 0.5 * h, y + 0.5 * h * k2)
    k4 = f(t + h, y + h * k3)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def integrate_plant(plant: PlantModel, x0, g: Callable[[float], float] | float, h: float, steps: int, t0: float = 0.0) -> np.ndarray:
    """Open-loop RK4 run of the plant alone; ``g`` is held over each step."""
    x = np.asarray(x0, dtype=float)
    t = t0
    for _ in range(steps):
        gk = g(t) if callable(g) else g
        x = rk4_step(lambda _t, y: plant.derivative(y, gk), t, x, h)
        t += h
    return x


@dataclass
class SimState:
    t: float
    x: np.ndarray
    phi_hat: np.ndarray
    trigger: TriggerState
    k: int = 0


class Trajectory:
    """Sampled run record on a uniform grid (every ``decimation`` cycles)."""

    def __init__(self, n: int, capacity: int, decimation: int = 1):
        self.n = n
        self.decimation = decimation
        self.columns = (
            ["t"]
            + [f"x{i + 1}" for i in range(n)]
            + [f"w{i + 1}" for i in range(n)]
            + [f"z{i + 1}" for i in range(n)]
            + ["alpha_n", "d", "g_held"]
            + [f"phi_hat{i + 1}" for i in range(n)]
            + ["y", "x_r", "w_s", "event"]
        )
        self._data = np.empty((capacity, len(self.columns)))
        self._len = 0
        self.index = {c: i for i, c in enumerate(self.columns)}

    def append(self, row: Sequence[float]):
        if self._len == self._data.shape[0]:
            self._data = np.concatenate([self._data, np.empty_like(self._data)])
        self._data[self._len] = row
        self._len += 1

    def __len__(self) -> int:
        return self._len

    @property
    def data(self) -> np.ndarray:
        return self._data[: self._len]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.data[:, self.index[name]]

    def block(self, prefix: str) -> np.ndarray:
        return np.column_stack([self[f"{prefix}{i + 1}"] for i in range(self.n)])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        ev = self.index["event"]
        for row in self.data:
            w.writerow([repr(float(v)) if j != ev else int(v) for j, v in enumerate(row)])
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text


EVENT_COLUMNS = ("t_event", "g_value", "strategy", "reason", "inter_event_interval")


def events_to_csv(events: Sequence[EventRecord], strategy: str, path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(EVENT_COLUMNS)
    for e in events:
        w.writerow([repr(e.time), repr(e.g), strategy, e.reason, "" if math.isnan(e.interval) else repr(e.interval)])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def build_networks(cfg: ExperimentConfig) -> list[RbfNetwork]:
    nw = cfg.network
    return [
        RbfNetwork(
            lattice_centers(regressor_dim(i + 1), nw.per_dim, nw.low, nw.high, nw.max_centers), nw.width, nw.basis
        )
        for i in range(cfg.n)
    ]


class Simulation:
    """Wires a validated config into plant, reference, controller and trigger."""

    def __init__(self, cfg: ExperimentConfig, log_controller: bool = False):
        self.cfg = cfg
        self.plant = build_plant(cfg.plant.name, cfg.plant.params)
        self.reference: Reference = build_reference(cfg.simulation.reference)
        c = cfg.controller
        self.controller = BacksteppingController(
            cfg.bounds.lower, cfg.bounds.upper, c.k1, c.q, c.u, c.eps, c.tau, build_networks(cfg), cfg.mapping
        )
        self.strategy = cfg.strategy
        self.h = cfg.simulation.step
        self.n = cfg.n
        self.log_controller = log_controller
        self.controller_log: list[dict] = []

    def mapped_reference(self, t: float):
        lo, hi = self.cfg.bounds.lower[0], self.cfg.bounds.upper[0]
        return map_reference(self.reference.value(t), self.reference.rate(t, self.h), lo, hi, kind=self.cfg.mapping)

    def control(self, t: float, x, phi_hat) -> ControlComputation:
        ref = self.mapped_reference(t)
        return self.controller.compute(x, phi_hat, ref.w_s, ref.w_s_dot, time=t)

    def initial_state(self) -> SimState:
        x0 = np.array(self.cfg.simulation.x0, dtype=float)
        if not initial_state_check(x0, self.cfg.bounds):
            i = next(
                i for i, (xi, lo, hi) in enumerate(zip(x0, self.cfg.bounds.lower, self.cfg.bounds.upper))
                if not -lo < xi < hi
            )
            raise ConstraintViolation(i, float(x0[i]), self.cfg.bounds.lower[i], self.cfg.bounds.upper[i], 0.0)
        return SimState(0.0, x0, np.array(self.cfg.controller.phi0, dtype=float), TriggerState())

    def sample(self, state: SimState) -> ControlComputation:
        """Evaluate the laws at the current sample and update the actuator."""
        comp = self.control(state.t, state.x, state.phi_hat)
        d = adaptive_signal(self.strategy, comp.control, float(comp.z[-1]))
        comp.d = d
        step_trigger_runtime(state.trigger, state.t, d, self.strategy, self.h)
        if self.log_controller:
            self.controller_log.append({"t": state.t, "d": d, "g_held": state.trigger.g_held, **comp.diagnostics()})
        return comp

    def advance(self, state: SimState, comp: ControlComputation | None = None) -> SimState:
        """Integrate one cycle with the held input; returns the new state."""
        n, h, t = self.n, self.h, state.t
        g = state.trigger.g_held
        plant = self.plant

        def rhs(tt, y):
            x, ph = y[:n], y[n:]
            rates = self.control(tt, x, ph).phi_rates
            return np.concatenate([plant.derivative(x, g), rates])

        y = np.concatenate([state.x, state.phi_hat])
        k1 = None
        if comp is not None:
            k1 = np.concatenate([plant.derivative(state.x, g), comp.phi_rates])
        try:
            y1 = rk4_step(rhs, t, y, h, k1)
        except ConstraintViolation as exc:
            # a non-finite stage value is divergence, not a bound crossing
            raise _StepAbort(exc if math.isfinite(exc.value) else None, t) from exc
        except MappingSaturation as exc:
            raise _StepAbort(ConstraintViolation(n - 1, math.nan, 0, 0, t), t) from exc
        except OverflowError as exc:
            raise _StepAbort(None, t) from exc
        if not np.all(np.isfinite(y1)):
            raise _StepAbort(None, t)
        x1 = y1[:n]
        lo, hi = self.cfg.bounds.lower, self.cfg.bounds.upper
        if self.cfg.mapping != ASYMMETRIC:
            hi = lo
        for i in range(n):
            if not -lo[i] < x1[i] < hi[i]:
                raise _StepAbort(ConstraintViolation(i, float(x1[i]), lo[i], hi[i], t + h), t + h)
        ph = np.maximum(y1[n:], 0.0)
        return SimState((state.k + 1) * h, x1, ph, state.trigger, state.k + 1)


class _StepAbort(Exception):
    def __init__(self, violation: ConstraintViolation | None, time: float):
        self.violation = violation
        self.time = time


def step(state: SimState, sim: Simulation) -> SimState:
    """Sample, actuate and integrate one cycle (public single-step entry point)."""
    comp = sim.sample(state)
    try:
        return sim.advance(state, comp)
    except _StepAbort as exc:
        if exc.violation is None:
            raise DivergenceError(f"non-finite state at t={exc.time:.6g}", exc.time) from None
        raise ConstraintViolationError(exc.violation, exc.time) from None


@dataclass
class RunResult:
    config: ExperimentConfig
    trajectory: Trajectory
    events: list[EventRecord]
    trigger: TriggerState
    summary: "object" = None
    status: str = "ok"
    error: str | None = None
    cycles_completed: int = 0
    min_margin: float = math.inf
    controller_log: list = field(default_factory=list)


def run(cfg: ExperimentConfig, *, log_controller: bool = False, decimate: int | None = None) -> RunResult:
    """Simulate ``cfg`` over [0, duration].

    Raises ConstraintViolationError or DivergenceError with ``.result``
    holding everything recorded up to the last valid sample.
    """
    from .analysis import summarize

    sim = Simulation(cfg, log_controller)
    dec = decimate or cfg.simulation.decimate
    N = cfg.simulation.cycles
    try:
        state = sim.initial_state()
    except ConstraintViolation as v:
        traj = Trajectory(cfg.n, 1, dec)
        result = RunResult(cfg, traj, [], TriggerState(), status="constraint-violation", error=str(v))
        result.summary = summarize(result)
        raise ConstraintViolationError(v, 0.0, result) from None

    traj = Trajectory(cfg.n, N // dec + 1, dec)
    result = RunResult(cfg, traj, state.trigger.events, state.trigger, controller_log=sim.controller_log)
    with np.errstate(over="ignore", invalid="ignore"):
        err = _run_loop(sim, state, result, traj, dec, N)
    if err is not None:
        result.status = "constraint-violation" if isinstance(err, ConstraintViolationError) else "diverged"
        result.error = str(err)
    result.summary = summarize(result)
    if err is not None:
        err.result = result
        raise err
    return result


def _run_loop(sim: Simulation, state: SimState, result: RunResult, traj: Trajectory, dec: int, N: int):
    cfg = sim.cfg
    bounds = cfg.bounds
    out_idx = sim.plant.output_index
    err: SimulationError | None = None
    while True:
        k = state.k
        try:
            comp = sim.sample(state)
        except ConstraintViolation as exc:
            err = ConstraintViolationError(exc, state.t)
            break
        except MappingSaturation:
            err = ConstraintViolationError(ConstraintViolation(cfg.n - 1, math.nan, 0, 0, state.t), state.t)
            break
        except OverflowError:
            err = DivergenceError(f"control overflow at t={state.t:.6g}", state.t)
            break
        if not math.isfinite(comp.d):
            err = DivergenceError(f"non-finite control at t={state.t:.6g}", state.t)
            break
        result.min_margin = min(result.min_margin, bounds.margin(state.x))
        if k % dec == 0:
            traj.append(
                [state.t, *state.x, *comp.w, *comp.z, comp.control, comp.d, state.trigger.g_held, *state.phi_hat,
                 state.x[out_idx], sim.reference.value(state.t), comp.w_s, 1.0 if state.trigger.fired else 0.0]
            )
        result.cycles_completed = k
        if k >= N:
            break
        try:
            state = sim.advance(state, comp)
        except _StepAbort as exc:
            if exc.violation is None:
                err = DivergenceError(f"non-finite state at t={exc.time:.6g}", exc.time)
            else:
                err = ConstraintViolationError(exc.violation, exc.time)
            break
    return err


def run_safely(cfg: ExperimentConfig, **kw) -> RunResult:
    """Like :func:`run` but returns the partial result instead of raising."""
    try:
        return run(cfg, **kw)
    except SimulationError as exc:
        return exc.result


@dataclass
class SweepOutcome:
    label: str
    summary: object | None
    status: str
    error: str | None = None


def _variation_config(template: ExperimentConfig, variation) -> ExperimentConfig:
    if isinstance(variation, ExperimentConfig):
        return variation
    if isinstance(variation, dict):
        d = to_dict(template)
        for key, val in variation.items():
            d.setdefault(key, {})
            if isinstance(val, dict) and isinstance(d.get(key), dict):
                d[key] = {**d[key], **val}
            else:
                d[key] = val
        return from_dict(d)
    return apply_overrides(template, list(variation))


def _label(variation, i: int) -> str:
    if isinstance(variation, ExperimentConfig):
        return variation.name
    if isinstance(variation, dict):
        return ",".join(f"{k}={v}" for k, v in variation.items()) or f"run{i}"
    return ",".join(variation) or f"run{i}"


def _sweep_one(args) -> SweepOutcome:
    template, variation, i = args
    label = _label(variation, i)
    try:
        cfg = _variation_config(template, variation)
    except ConfigError as exc:
        return SweepOutcome(label, None, "config-error", str(exc))
    try:
        res = run(cfg)
        return SweepOutcome(label, res.summary, "ok")
    except SimulationError as exc:
        return SweepOutcome(label, exc.result.summary if exc.result else None, exc.result.status if exc.result else "error", str(exc))
    except FixedTimeEtcError as exc:
        return SweepOutcome(label, None, "error", str(exc))


def run_sweep(template: ExperimentConfig, variations: Sequence, jobs: int = 1) -> list[SweepOutcome]:
    """Run independent variations of ``template``; output order follows input order.

    A variation is an ExperimentConfig, a dict of section overrides, or a
    list of ``key=value`` override strings. Per-run failures are recorded and
    the sweep continues.
    """
    tasks = [(template, v, i) for i, v in enumerate(variations)]
    if not tasks:
        return []
    if jobs <= 1 or len(tasks) == 1:
        return [_sweep_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_sweep_one, tasks))
