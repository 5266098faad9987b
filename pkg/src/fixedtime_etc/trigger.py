"""Event-triggered actuation: adaptive signal, trigger rules, zero-order hold.

The controller computes an adaptive signal d(t) every sample; the actuator
holds g = d(t_j) until the next event. Event rules compare the measurement
error e = d - g against a threshold; the self-triggered rule instead
schedules the next update time when an event fires.

Predicates are checked once per simulation sample, on the sample grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import (
    Continuous,
    FixedThreshold,
    RelativeThreshold,
    SelfTriggered,
    SwitchedThreshold,
    TriggerStrategy,
)


def adaptive_signal(strategy: TriggerStrategy, alpha_n: float, z_n: float) -> float:
    if isinstance(strategy, Continuous):
        return alpha_n
    if isinstance(strategy, FixedThreshold):
        c, phi = strategy.compensation, strategy.smoothing
        return alpha_n - c * math.tanh(z_n * c / phi)
    theta, phi = strategy.gain, strategy.smoothing
    c = strategy.relative_compensation if isinstance(strategy, SwitchedThreshold) else strategy.compensation
    return -(1.0 + theta) * (alpha_n * math.tanh(z_n * alpha_n / phi) + c * math.tanh(z_n * c / phi))


def threshold(strategy: TriggerStrategy, g: float) -> float:
    """Error magnitude at which an event fires while ``g`` is held."""
    if isinstance(strategy, FixedThreshold):
        return strategy.threshold
    if isinstance(strategy, RelativeThreshold):
        return strategy.gain * abs(g) + strategy.offset
    if isinstance(strategy, SwitchedThreshold):
        if abs(g) < strategy.switch_level:
            return strategy.gain * abs(g) + strategy.offset
        return strategy.threshold
    if isinstance(strategy, Continuous):
        return 0.0
    raise TypeError(f"{type(strategy).__name__} is time-scheduled and has no error threshold")


def should_trigger(strategy: TriggerStrategy, e: float, g: float) -> bool:
    """|e| >= threshold (inclusive)."""
    return abs(e) >= threshold(strategy, g)


def switched_branch(strategy: SwitchedThreshold, g: float) -> str:
    return "relative" if abs(g) < strategy.switch_level else "fixed"


def next_trigger_time(strategy: SelfTriggered, t_j: float, g: float, d_rate: float) -> float:
    """t_{j+1} = t_j + (theta |g| + offset) / max(|d'|, pi)."""
    return t_j + (strategy.gain * abs(g) + strategy.offset) / max(abs(d_rate), strategy.rate_floor)


@dataclass
class EventRecord:
    time: float
    g: float
    reason: str
    interval: float  # since the previous event; nan for the first


@dataclass
class TriggerState:
    """Zero-order-hold runtime owned by one simulation run."""

    g_held: float = 0.0
    t_last: float = -math.inf
    d_last: float = math.nan
    d_prev: float = math.nan
    d_rate: float = 0.0  # filtered estimate for the self-triggered schedule
    t_next: float = 0.0
    t_sample: float = -math.inf
    fired: bool = False
    events: list[EventRecord] = field(default_factory=list)
    branch_counts: dict[str, int] = field(default_factory=dict)
    max_d_rate: float = 0.0  # sup of the |d'| estimate over all samples
    min_scheduled_interval: float = math.inf

    @property
    def count(self) -> int:
        return len(self.events)

    def _fire(self, t: float, d: float, reason: str):
        interval = t - self.t_last if self.events else math.nan
        self.g_held = d
        self.t_last = t
        self.fired = True
        self.events.append(EventRecord(t, d, reason, interval))
        self.branch_counts[reason] = self.branch_counts.get(reason, 0) + 1


# fraction of a step by which a scheduled time may precede the sample and still fire there
_SCHEDULE_SLACK = 1e-9


def step_trigger_runtime(state: TriggerState, t: float, d: float, strategy: TriggerStrategy, h: float) -> TriggerState:
    """Advance the runtime to sample ``t`` with new adaptive signal ``d``.

    The first call fires unconditionally. The state is updated in place and
    returned; ``state.fired`` tells whether this sample was an event.
    """
    if not t > state.t_sample:
        raise ValueError(f"sample time {t!r} does not advance past {state.t_sample!r}")
    state.t_sample = t
    state.fired = False
    first = not state.events

    if isinstance(strategy, SelfTriggered):
        if not math.isnan(state.d_last):
            raw = (d - state.d_last) / h
            if strategy.derivative_filter == "lowpass":
                a = h / (5.0 * h + h)
                state.d_rate += a * (raw - state.d_rate)
            else:
                state.d_rate = raw
            state.max_d_rate = max(state.max_d_rate, abs(state.d_rate))
        state.d_prev, state.d_last = state.d_last, d
        if first or t >= state.t_next - _SCHEDULE_SLACK * h:
            state._fire(t, d, "initial" if first else "scheduled")
            state.t_next = next_trigger_time(strategy, t, state.g_held, state.d_rate)
            state.min_scheduled_interval = min(state.min_scheduled_interval, state.t_next - t)
        return state

    state.d_prev, state.d_last = state.d_last, d
    if first:
        state._fire(t, d, "initial")
    elif isinstance(strategy, Continuous):
        state._fire(t, d, "continuous")
    elif should_trigger(strategy, d - state.g_held, state.g_held):
        reason = switched_branch(strategy, state.g_held) if isinstance(strategy, SwitchedThreshold) else "threshold"
        state._fire(t, d, reason)
    return state
