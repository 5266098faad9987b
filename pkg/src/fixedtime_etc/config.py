"""Experiment configuration: dataclasses, validation, YAML I/O and presets.

A configuration file is a YAML mapping with the sections ``plant``,
``bounds``, ``controller``, ``network``, ``strategy`` and ``simulation``.
Everything is validated on load; soft problems (parameter choices that break
an analytical assumption but still simulate) are collected as warnings.
"""

from __future__ import annotations

import copy
import re
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, ClassVar, Sequence

import numpy as np
import yaml

from .errors import ConfigError
from .mapping import ASYMMETRIC, MAPPING_KINDS
from .plants import build_plant, build_reference
from .rbf import BASIS_KINDS, UNSQUARED


def _floats(seq) -> tuple[float, ...]:
    return tuple(float(v) for v in seq)


@dataclass(frozen=True)
class PlantSpec:
    name: str = "paper-sec4"
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConstraintBounds:
    """Open box ``-lower[i] < x[i] < upper[i]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "lower", _floats(self.lower))
        object.__setattr__(self, "upper", _floats(self.upper))

    @property
    def n(self) -> int:
        return len(self.lower)

    def contains(self, x: Sequence[float]) -> bool:
        return initial_state_check(x, self)

    def margin(self, x: Sequence[float]) -> float:
        """Smallest distance from ``x`` to any bound (negative when outside)."""
        return min(min(xi + lo, hi - xi) for xi, lo, hi in zip(x, self.lower, self.upper))


def initial_state_check(x0: Sequence[float], bounds: ConstraintBounds) -> bool:
    if len(x0) != bounds.n:
        raise ValueError(f"dimension mismatch: {len(x0)} states vs {bounds.n} bounds")
    return all(-lo < xi < hi for xi, lo, hi in zip(x0, bounds.lower, bounds.upper))


@dataclass(frozen=True)
class ControllerParams:
    """Per-step gains and adaptation constants (index ``o`` = backstepping step).

    ``k2`` and ``p`` never enter the implemented laws; they only feed the
    settling-time calculator.
    """

    k1: tuple[float, ...]
    k2: tuple[float, ...]
    p: float
    q: float
    tau: tuple[float, ...]
    u: tuple[float, ...]
    f: tuple[float, ...]
    phi0: tuple[float, ...]

    def __post_init__(self):
        for name in ("k1", "k2", "tau", "u", "f", "phi0"):
            object.__setattr__(self, name, _floats(getattr(self, name)))
        object.__setattr__(self, "p", float(self.p))
        object.__setattr__(self, "q", float(self.q))

    @property
    def eps(self) -> tuple[float, ...]:
        return tuple(2.0 * fo / (2.0 * fo - 1.0) for fo in self.f)


@dataclass(frozen=True)
class NetworkParams:
    basis: str = UNSQUARED
    width: float = 2.0
    per_dim: int = 7
    low: float = -3.0
    high: float = 3.0
    max_centers: int = 343


# --------------------------------------------------------------------------
# trigger strategies


@dataclass(frozen=True)
class Continuous:
    """No triggering: the actuator receives the control law every sample."""

    kind: ClassVar[str] = "continuous"


@dataclass(frozen=True)
class FixedThreshold:
    kind: ClassVar[str] = "fixed"
    threshold: float  # trigger when |e| >= threshold
    compensation: float  # tanh compensation amplitude in d(t)
    smoothing: float  # Phi


@dataclass(frozen=True)
class RelativeThreshold:
    kind: ClassVar[str] = "relative"
    gain: float  # theta
    offset: float  # trigger when |e| >= gain |g| + offset
    compensation: float
    smoothing: float


@dataclass(frozen=True)
class SwitchedThreshold:
    """Relative rule while |g| < switch_level, fixed rule above it."""

    kind: ClassVar[str] = "switched"
    gain: float
    offset: float
    threshold: float
    compensation: float  # fixed-branch compensation (analysis only)
    relative_compensation: float  # used in d(t)
    smoothing: float
    switch_level: float


@dataclass(frozen=True)
class SelfTriggered:
    kind: ClassVar[str] = "self"
    gain: float
    offset: float
    compensation: float
    smoothing: float
    rate_floor: float  # pi: lower clamp on |d'| in the schedule
    derivative_filter: str = "backward"  # or "lowpass" (time constant 5 h)


TriggerStrategy = Continuous | FixedThreshold | RelativeThreshold | SwitchedThreshold | SelfTriggered
STRATEGIES: dict[str, type] = {
    c.kind: c for c in (Continuous, FixedThreshold, RelativeThreshold, SwitchedThreshold, SelfTriggered)
}


def strategy_from_dict(d: dict) -> TriggerStrategy:
    d = dict(d)
    kind = d.pop("kind", None)
    if kind not in STRATEGIES:
        raise ConfigError("strategy.kind", f"unknown strategy {kind!r}; known: {', '.join(STRATEGIES)}")
    cls = STRATEGIES[kind]
    names = {f.name for f in dataclasses.fields(cls)}
    extra = set(d) - names
    if extra:
        raise ConfigError(f"strategy.{sorted(extra)[0]}", f"not a parameter of the {kind} strategy")
    missing = {f.name for f in dataclasses.fields(cls) if f.default is dataclasses.MISSING} - set(d)
    if missing:
        raise ConfigError(f"strategy.{sorted(missing)[0]}", "required")
    kwargs = {k: (v if isinstance(v, str) else float(v)) for k, v in d.items()}
    return cls(**kwargs)


def strategy_to_dict(s: TriggerStrategy) -> dict:
    return {"kind": s.kind, **dataclasses.asdict(s)}


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    step: float = 1e-3
    duration: float = 20.0
    x0: tuple[float, ...] = (0.05, 0.5)
    reference: dict = field(default_factory=lambda: {"name": "paper-sec4"})
    seed: int = 0
    decimate: int = 1
    settle_time: float = 5.0
    band: float = 0.1
    output_dir: str = "out"

    def __post_init__(self):
        object.__setattr__(self, "x0", _floats(self.x0))

    @property
    def cycles(self) -> int:
        return int(round(self.duration / self.step))


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    plant: PlantSpec
    bounds: ConstraintBounds
    controller: ControllerParams
    strategy: TriggerStrategy
    simulation: SimConfig
    network: NetworkParams = NetworkParams()
    mapping: str = ASYMMETRIC
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def n(self) -> int:
        return self.bounds.n

    def replace(self, **changes) -> "ExperimentConfig":
        return validated(dataclasses.replace(self, **changes))


# --------------------------------------------------------------------------
# validation


def _check(cond: bool, path: str, message: str):
    if not cond:
        raise ConfigError(path, message)


def _positive(values, path):
    for i, v in enumerate(values):
        _check(np.isfinite(v) and v > 0, f"{path}[{i}]", f"must be positive, got {v!r}")


def validate(cfg: ExperimentConfig) -> list[str]:
    """Raise ConfigError on any hard invariant; return soft warnings."""
    warnings: list[str] = []
    n = cfg.bounds.n
    _check(n >= 1, "bounds", "at least one state is required")
    _check(len(cfg.bounds.upper) == n, "bounds.upper", f"expected {n} values")
    _positive(cfg.bounds.lower, "bounds.lower")
    _positive(cfg.bounds.upper, "bounds.upper")
    _check(cfg.mapping in MAPPING_KINDS, "mapping", f"expected one of {MAPPING_KINDS}")

    plant = build_plant(cfg.plant.name, cfg.plant.params)
    _check(plant.order == n, "plant.name", f"plant {cfg.plant.name!r} has order {plant.order}, bounds give {n}")

    c = cfg.controller
    for name in ("k1", "k2", "tau", "u", "f", "phi0"):
        _check(len(getattr(c, name)) == n, f"controller.{name}", f"expected {n} values")
    _positive(c.k1, "controller.k1")
    _positive(c.k2, "controller.k2")
    _positive(c.tau, "controller.tau")
    _positive(c.u, "controller.u")
    for i, fo in enumerate(c.f):
        _check(fo > 0.5, f"controller.f[{i}]", f"must be > 1/2 so that eps > 1, got {fo!r}")
    for i, v in enumerate(c.phi0):
        _check(v >= 0, f"controller.phi0[{i}]", "initial estimates must be nonnegative")
    _check(c.q > 0.5, "controller.q", "q must exceed 1/2 so that 2q-1 > 0")
    if not (0 < c.p < 1 < c.q):
        warnings.append(
            f"controller: p={c.p}, q={c.q} break 0 < p < 1 < q; the fixed-time settling bound is not finite"
        )

    nw = cfg.network
    _check(nw.basis in BASIS_KINDS, "network.basis", f"expected one of {BASIS_KINDS}")
    _check(nw.width > 0, "network.width", "must be positive")
    _check(nw.per_dim >= 1, "network.per_dim", "must be >= 1")
    _check(nw.max_centers >= 1, "network.max_centers", "must be >= 1")
    _check(nw.high > nw.low, "network.high", "must exceed network.low")

    warnings += _validate_strategy(cfg.strategy)

    s = cfg.simulation
    _check(s.step > 0, "simulation.step", "must be positive")
    _check(s.duration > 0, "simulation.duration", "must be positive")
    _check(s.decimate >= 1, "simulation.decimate", "must be >= 1")
    _check(len(s.x0) == n, "simulation.x0", f"expected {n} values")
    _check(s.band > 0, "simulation.band", "must be positive")
    ref = build_reference(s.reference)
    r0 = ref.value(0.0)
    lo, hi = (cfg.bounds.lower[0], cfg.bounds.upper[0])
    if cfg.mapping != ASYMMETRIC:
        hi = lo
    _check(-lo < r0 < hi, "simulation.reference", f"x_r(0)={r0!r} outside the state-1 box")
    return warnings


def _validate_strategy(s: TriggerStrategy) -> list[str]:
    w: list[str] = []
    if isinstance(s, Continuous):
        return w
    _check(s.smoothing > 0, "strategy.smoothing", "must be positive")
    if isinstance(s, FixedThreshold):
        _check(s.threshold > 0, "strategy.threshold", "must be positive")
        _check(s.compensation > 0, "strategy.compensation", "must be positive")
        if not s.compensation > s.threshold:
            w.append(
                f"strategy: compensation={s.compensation} does not exceed threshold={s.threshold}; "
                "the held-input error is not dominated"
            )
        return w
    _check(0 < s.gain < 1, "strategy.gain", f"must lie in (0, 1), got {s.gain!r}")
    _check(s.offset > 0, "strategy.offset", "must be positive")
    comp = s.relative_compensation if isinstance(s, SwitchedThreshold) else s.compensation
    path = "strategy.relative_compensation" if isinstance(s, SwitchedThreshold) else "strategy.compensation"
    _check(comp > 0, path, "must be positive")
    if not comp > s.offset / (1 - s.gain):
        w.append(f"{path}={comp} does not exceed offset/(1-gain)={s.offset / (1 - s.gain):.6g}")
    if isinstance(s, SwitchedThreshold):
        _check(s.threshold > 0, "strategy.threshold", "must be positive")
        _check(s.switch_level > 0, "strategy.switch_level", "must be positive")
        if not s.compensation > s.threshold:
            w.append(f"strategy: compensation={s.compensation} does not exceed threshold={s.threshold}")
    if isinstance(s, SelfTriggered):
        _check(s.rate_floor > 0, "strategy.rate_floor", "must be positive")
        _check(s.derivative_filter in ("backward", "lowpass"), "strategy.derivative_filter", "expected 'backward' or 'lowpass'")
    return w


def validated(cfg: ExperimentConfig) -> ExperimentConfig:
    return dataclasses.replace(cfg, warnings=tuple(validate(cfg)))


# --------------------------------------------------------------------------
# dict / YAML round trip


def to_dict(cfg: ExperimentConfig) -> dict[str, Any]:
    c = cfg.controller
    return {
        "name": cfg.name,
        "plant": {"name": cfg.plant.name, "params": dict(cfg.plant.params)},
        "bounds": {"lower": list(cfg.bounds.lower), "upper": list(cfg.bounds.upper)},
        "mapping": cfg.mapping,
        "controller": {
            "k1": list(c.k1), "k2": list(c.k2), "p": c.p, "q": c.q,
            "tau": list(c.tau), "u": list(c.u), "f": list(c.f), "phi0": list(c.phi0),
        },
        "network": dataclasses.asdict(cfg.network),
        "strategy": strategy_to_dict(cfg.strategy),
        "simulation": {
            **dataclasses.asdict(cfg.simulation),
            "x0": list(cfg.simulation.x0),
            "reference": dict(cfg.simulation.reference),
        },
    }


def _section(d: dict, key: str, required: bool = True) -> dict:
    if key not in d:
        if required:
            raise ConfigError(key, "missing section")
        return {}
    val = d[key]
    if not isinstance(val, dict):
        raise ConfigError(key, "expected a mapping")
    return val


def _build(cls, d: dict, path: str):
    names = {f.name for f in dataclasses.fields(cls) if f.init}
    extra = set(d) - names
    if extra:
        raise ConfigError(f"{path}.{sorted(extra)[0]}", "unknown key")
    try:
        return cls(**d)
    except TypeError as exc:
        raise ConfigError(path, str(exc)) from None
    except ValueError as exc:
        raise ConfigError(path, f"bad value: {exc}") from None


def from_dict(d: dict[str, Any]) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("", "configuration root must be a mapping")
    extra = set(d) - {"name", "plant", "bounds", "mapping", "controller", "network", "strategy", "simulation"}
    if extra:
        raise ConfigError(sorted(extra)[0], "unknown section")
    bounds = _build(ConstraintBounds, _section(d, "bounds"), "bounds")
    ctrl = dict(_section(d, "controller"))
    n = bounds.n
    ctrl.setdefault("k2", ctrl.get("k1"))
    ctrl.setdefault("phi0", [0.0] * n)
    cfg = ExperimentConfig(
        name=str(d.get("name", "experiment")),
        plant=_build(PlantSpec, _section(d, "plant"), "plant"),
        bounds=bounds,
        controller=_build(ControllerParams, ctrl, "controller"),
        strategy=strategy_from_dict(_section(d, "strategy")),
        simulation=_build(SimConfig, _section(d, "simulation", required=False), "simulation"),
        network=_build(NetworkParams, _section(d, "network", required=False), "network"),
        mapping=str(d.get("mapping", ASYMMETRIC)),
    )
    return validated(cfg)


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads exponent floats without a dot (``1e-4``)."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def _yaml_load(text: str):
    return yaml.load(text, Loader=_Loader)


def dumps(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(to_dict(cfg), sort_keys=False)


def loads(text: str) -> ExperimentConfig:
    try:
        data = _yaml_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("", f"parse error: {exc}") from None
    return from_dict(data)


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError("", f"no such file: {p}")
    return loads(p.read_text())


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(dumps(cfg))


# --------------------------------------------------------------------------
# overrides


_ALIASES = {
    "step": "simulation.step",
    "duration": "simulation.duration",
    "seed": "simulation.seed",
    "decimate": "simulation.decimate",
}


def apply_overrides(cfg: ExperimentConfig, overrides: Sequence[str]) -> ExperimentConfig:
    """Apply ``key=value`` overrides.

    Keys are dotted paths into the YAML tree (``controller.k1``,
    ``strategy.threshold``, ``controller.k1[1]``) or the shortcuts
    ``x{i}_0`` for the i-th initial state (1-based), ``step``, ``duration``,
    ``seed`` and ``decimate``. Values are parsed as YAML scalars/lists.
    """
    d = copy.deepcopy(to_dict(cfg))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(item, "override must look like key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        try:
            value = _yaml_load(raw)
        except yaml.YAMLError:
            value = raw
        if key.startswith("x") and key.endswith("_0") and key[1:-2].isdigit():
            key = f"simulation.x0[{int(key[1:-2]) - 1}]"
        key = _ALIASES.get(key, key)
        _set_path(d, key, value)
    return from_dict(d)


def _set_path(d: dict, key: str, value):
    parts = key.split(".")
    node = d
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise ConfigError(key, "no such section")
        node = node[part]
    last = parts[-1]
    if "[" in last and last.endswith("]"):
        name, idx = last[:-1].split("[")
        seq = node.get(name)
        if not isinstance(seq, list):
            raise ConfigError(key, "not a list field")
        i = int(idx)
        if not 0 <= i < len(seq):
            raise ConfigError(key, f"index out of range (length {len(seq)})")
        seq[i] = value
    else:
        node[last] = value


# --------------------------------------------------------------------------
# presets

_PAPER_BOUNDS = {"lower": [1.0, 8.0], "upper": [2.0, 9.0]}

_PAPER_STRATEGIES = {
    "fixed": ([800.0, 19.0], {"kind": "fixed", "threshold": 5.0, "compensation": 3.0, "smoothing": 900.0}),
    "relative": (
        [800.0, 18.0],
        {"kind": "relative", "gain": 0.1, "offset": 0.1, "compensation": 15.0, "smoothing": 900.0},
    ),
    "switched": (
        [800.0, 19.0],
        {
            "kind": "switched", "gain": 0.1, "offset": 2.0, "threshold": 4.0, "compensation": 10.0,
            "relative_compensation": 10.0, "smoothing": 900.0, "switch_level": 80.0,
        },
    ),
    "self": (
        [1200.0, 3.0],
        {
            "kind": "self", "gain": 0.51, "offset": 2.0, "compensation": 15.0,
            "smoothing": 900.0, "rate_floor": 650.0,
        },
    ),
}


def _paper_dict(strategy: str, p: float) -> dict:
    if strategy == "continuous":
        k1, strat = _PAPER_STRATEGIES["fixed"][0], {"kind": "continuous"}
    else:
        k1, strat = _PAPER_STRATEGIES[strategy]
    return {
        "name": f"paper-sec4-{strategy}",
        "plant": {"name": "paper-sec4", "params": {"drift_input": 0.0, "input_coupling": "affine"}},
        "bounds": copy.deepcopy(_PAPER_BOUNDS),
        "controller": {
            "k1": list(k1), "k2": list(k1), "p": p, "q": 1.05,
            "tau": [10.0, 10.0], "u": [1.0, 1.0], "f": [6.0, 3.0], "phi0": [0.0, 0.0],
        },
        "strategy": dict(strat),
        "simulation": {"step": 1e-3, "duration": 20.0, "x0": [0.05, 0.5], "reference": {"name": "paper-sec4"}},
    }


def _demo_dict(strategy: str) -> dict:
    strategies = {
        "continuous": {"kind": "continuous"},
        "fixed": {"kind": "fixed", "threshold": 0.5, "compensation": 0.6, "smoothing": 50.0},
        "relative": {"kind": "relative", "gain": 0.1, "offset": 0.05, "compensation": 0.2, "smoothing": 50.0},
        "switched": {
            "kind": "switched", "gain": 0.1, "offset": 0.05, "threshold": 0.5, "compensation": 0.6,
            "relative_compensation": 0.2, "smoothing": 50.0, "switch_level": 2.0,
        },
        "self": {
            "kind": "self", "gain": 0.3, "offset": 3.0, "compensation": 5.0,
            "smoothing": 900.0, "rate_floor": 300.0, "derivative_filter": "lowpass",
        },
    }
    return {
        "name": f"demo-{strategy}",
        "plant": {"name": "strict-feedback-demo", "params": {}},
        "bounds": copy.deepcopy(_PAPER_BOUNDS),
        "controller": {
            "k1": [20.0, 40.0], "k2": [20.0, 40.0], "p": 0.75, "q": 1.05,
            "tau": [10.0, 10.0], "u": [1.0, 1.0], "f": [6.0, 3.0], "phi0": [0.0, 0.0],
        },
        "strategy": strategies[strategy],
        "simulation": {"step": 1e-3, "duration": 20.0, "x0": [0.05, 0.0], "reference": {"name": "paper-sec4"}},
    }


PAPER_PRESETS = tuple(f"paper-sec4-{s}" for s in ("fixed", "relative", "switched", "self"))


def preset_names() -> list[str]:
    names = [f"paper-sec4-{s}" for s in ("fixed", "relative", "switched", "self", "continuous")]
    names += [f"paper-sec4-{s}-corrected" for s in ("fixed", "relative", "switched", "self", "continuous")]
    names += [f"demo-{s}" for s in ("fixed", "relative", "switched", "self", "continuous")]
    return names


def preset_dict(name: str) -> dict:
    if name.startswith("paper-sec4-"):
        rest = name[len("paper-sec4-"):]
        corrected = rest.endswith("-corrected")
        strategy = rest[: -len("-corrected")] if corrected else rest
        if strategy in (*_PAPER_STRATEGIES, "continuous"):
            d = _paper_dict(strategy, 0.75 if corrected else 1.5)
            d["name"] = name
            return d
    if name.startswith("demo-"):
        strategy = name[len("demo-"):]
        if strategy in (*_PAPER_STRATEGIES, "continuous"):
            return _demo_dict(strategy)
    raise ConfigError("preset", f"unknown preset {name!r}; known: {', '.join(preset_names())}")


def preset(name: str) -> ExperimentConfig:
    return from_dict(preset_dict(name))


def as_continuous(cfg: ExperimentConfig) -> ExperimentConfig:
    """Same experiment with the actuator updated every sample."""
    return cfg.replace(name=f"{cfg.name}+continuous", strategy=Continuous())
