"""Code-registered plants and reference signals.

Plants have the cascade form

    dx_i/dt = h_i(x_1..x_{i+1}),            i < n
    dx_n/dt = b(x) g + h_n(x_1..x_n)

and are selected by name from configuration files; there is no expression
parser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class PlantModel:
    name: str
    order: int
    drift: Callable[[np.ndarray], np.ndarray]
    input_gain: Callable[[np.ndarray], float]
    output_index: int = 0
    # g-dependent term added to the last channel on top of b(x) g
    input_drift: Callable[[float], float] | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("plant order must be >= 1")
        if not 0 <= self.output_index < self.order:
            raise ValueError(f"output index {self.output_index} outside 0..{self.order - 1}")

    def derivative(self, x: np.ndarray, g: float) -> np.ndarray:
        dx = np.array(self.drift(x), dtype=float)
        dx[-1] += self.input_gain(x) * g
        if self.input_drift is not None:
            dx[-1] += self.input_drift(g)
        return dx

    def output(self, x: np.ndarray) -> float:
        return float(x[self.output_index])


PlantFactory = Callable[..., PlantModel]
_PLANTS: dict[str, PlantFactory] = {}


def register_plant(name: str):
    def deco(factory: PlantFactory) -> PlantFactory:
        _PLANTS[name] = factory
        return factory

    return deco


def plant_names() -> list[str]:
    return sorted(_PLANTS)


def build_plant(name: str, params: dict | None = None) -> PlantModel:
    try:
        factory = _PLANTS[name]
    except KeyError:
        raise ConfigError("plant.name", f"unknown plant {name!r}; known: {', '.join(plant_names())}") from None
    try:
        return factory(**(params or {}))
    except TypeError as exc:
        raise ConfigError("plant.params", str(exc)) from None


@register_plant("paper-sec4")
def _paper_plant(drift_input: float = 0.0, input_coupling: str = "affine") -> PlantModel:
    """Two-state example plant.

    dx1/dt = cos x2
    dx2/dt = g + x1^2 x2^2/26 + sin^2(x1 x2) g/5 + x1^2/2 + (u + 0.18)^2/26

    ``input_coupling="affine"`` holds ``u`` at the constant ``drift_input``;
    ``"quadratic"`` substitutes ``u = g``, which makes the input enter
    quadratically.
    """
    if input_coupling not in ("affine", "quadratic"):
        raise ConfigError("plant.params.input_coupling", f"expected 'affine' or 'quadratic', got {input_coupling!r}")
    drift_input = float(drift_input)

    def drift(x):
        x1, x2 = x[0], x[1]
        last = x1 * x1 * x2 * x2 / 26.0 + 0.5 * x1 * x1
        if input_coupling == "affine":
            last += (drift_input + 0.18) ** 2 / 26.0
        return np.array([math.cos(x2), last])

    def gain(x):
        s = math.sin(x[0] * x[1])
        return 1.0 + 0.2 * s * s

    quad = (lambda g: (g + 0.18) ** 2 / 26.0) if input_coupling == "quadratic" else None
    return PlantModel(
        "paper-sec4", 2, drift, gain, output_index=0, input_drift=quad,
        params={"drift_input": drift_input, "input_coupling": input_coupling},
    )


@register_plant("strict-feedback-demo")
def _demo_plant(coupling: float = 0.1) -> PlantModel:
    """Variant of the example plant whose first channel is monotone in x2.

    dx1/dt = x2 + coupling * sin x1
    dx2/dt = (1 + sin^2(x1 x2)/5) g + x1^2 x2^2/26 + x1^2/2
    """
    coupling = float(coupling)

    def drift(x):
        x1, x2 = x[0], x[1]
        return np.array([x2 + coupling * math.sin(x1), x1 * x1 * x2 * x2 / 26.0 + 0.5 * x1 * x1])

    def gain(x):
        s = math.sin(x[0] * x[1])
        return 1.0 + 0.2 * s * s

    return PlantModel("strict-feedback-demo", 2, drift, gain, output_index=0, params={"coupling": coupling})


@register_plant("linear-decay")
def _linear_plant(rate: float = 1.0) -> PlantModel:
    """Scalar dx/dt = -rate * x + g."""
    rate = float(rate)
    return PlantModel(
        "linear-decay", 1, lambda x: np.array([-rate * x[0]]), lambda x: 1.0, params={"rate": rate}
    )


# --------------------------------------------------------------------------
# references


@dataclass(frozen=True)
class Reference:
    name: str
    value: Callable[[float], float]
    derivative: Callable[[float], float] | None = None

    def rate(self, t: float, h: float) -> float:
        """Analytic derivative if known, else a central difference with step ``h``."""
        if self.derivative is not None:
            return self.derivative(t)
        return (self.value(t + h) - self.value(t - h)) / (2.0 * h)


_REFS: dict[str, Callable[..., Reference]] = {}


def register_reference(name: str):
    def deco(factory):
        _REFS[name] = factory
        return factory

    return deco


def reference_names() -> list[str]:
    return sorted(_REFS)


def build_reference(spec: dict) -> Reference:
    spec = dict(spec)
    name = spec.pop("name", None)
    if name not in _REFS:
        raise ConfigError("simulation.reference.name", f"unknown reference {name!r}; known: {', '.join(reference_names())}")
    try:
        return _REFS[name](**spec)
    except TypeError as exc:
        raise ConfigError("simulation.reference", str(exc)) from None


@register_reference("paper-sec4")
def _paper_reference() -> Reference:
    # x_r = 0.5 sin(0.1 t) cos^2(0.6 t)
    def value(t):
        c = math.cos(0.6 * t)
        return 0.5 * math.sin(0.1 * t) * c * c

    def deriv(t):
        c, s = math.cos(0.6 * t), math.sin(0.6 * t)
        return 0.05 * math.cos(0.1 * t) * c * c - 0.6 * math.sin(0.1 * t) * c * s

    return Reference("paper-sec4", value, deriv)


@register_reference("sine")
def _sine(amplitude: float = 0.5, frequency: float = 1.0, offset: float = 0.0) -> Reference:
    a, w, o = float(amplitude), float(frequency), float(offset)
    return Reference("sine", lambda t: o + a * math.sin(w * t), lambda t: a * w * math.cos(w * t))


@register_reference("constant")
def _constant(value: float = 0.0) -> Reference:
    v = float(value)
    return Reference("constant", lambda t: v, lambda t: 0.0)


@register_reference("smooth-step")
def _smooth_step(amplitude: float = 0.5, time: float = 2.0, sharpness: float = 2.0) -> Reference:
    """a * (1 + tanh(k (t - t0)))/2, supplied without a derivative."""
    a, t0, k = float(amplitude), float(time), float(sharpness)
    return Reference("smooth-step", lambda t: 0.5 * a * (1.0 + math.tanh(k * (t - t0))))
