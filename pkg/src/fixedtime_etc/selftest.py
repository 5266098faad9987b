"""Randomised property battery behind ``fixedtime-etc selftest``.

Each check draws its own samples from a seeded generator and counts
violations; a check passes with zero violations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .inequalities import TANH_GAP_FACTOR, tanh_gap, young_bound, young_product
from .mapping import delta, delta_floor, map_state, unmap_state
from .plants import build_plant
from .simulator import integrate_plant

DEFAULT_SAMPLES = 10_000
TOL = 1e-12


@dataclass
class PropertyResult:
    name: str
    samples: int
    violations: int
    worst: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: {self.violations}/{self.samples} violations, worst {self.worst:.3g} {self.detail}".rstrip()


def check_tanh_gap(rng: np.random.Generator, samples: int) -> PropertyResult:
    eta2 = 10.0 ** rng.uniform(-3, 2, samples)
    eta1 = eta2 * rng.uniform(-20, 20, samples)
    gap = tanh_gap(eta1, eta2)
    upper = TANH_GAP_FACTOR * eta2
    excess = np.maximum(-gap, gap - upper) / np.maximum(1.0, upper)
    return PropertyResult("tanh gap in [0, 0.2785 eta2]", samples, int(np.count_nonzero(excess > TOL)), float(excess.max()))


def check_young(rng: np.random.Generator, samples: int) -> PropertyResult:
    x = rng.uniform(-5, 5, samples)
    y = rng.uniform(-5, 5, samples)
    r1 = rng.uniform(0.1, 3, samples)
    r2 = rng.uniform(0.1, 3, samples)
    r3 = 10.0 ** rng.uniform(-1, 1, samples)
    lhs = young_product(x, y, r1, r2)
    rhs = young_bound(x, y, r1, r2, r3)
    excess = (lhs - rhs) / np.maximum(1.0, rhs)
    return PropertyResult("weighted Young bound", samples, int(np.count_nonzero(excess > TOL)), float(excess.max()))


def _random_boxes(rng, samples):
    lo = 10.0 ** rng.uniform(-1, 1, samples)
    hi = 10.0 ** rng.uniform(-1, 1, samples)
    frac = rng.uniform(1e-6, 1 - 1e-6, samples)
    x = -lo + frac * (lo + hi)
    return lo, hi, x


def check_round_trip(rng: np.random.Generator, samples: int) -> PropertyResult:
    lo, hi, x = _random_boxes(rng, samples)
    worst, bad = 0.0, 0
    for a, b, xi in zip(lo, hi, x):
        err = abs(unmap_state(map_state(xi, a, b), a, b) - xi) / max(abs(xi), 1.0)
        worst = max(worst, err)
        bad += err >= TOL
    return PropertyResult("map/unmap round trip", samples, bad, worst)


def check_delta_derivative(
    rng: np.random.Generator, samples: int, delta_fn: Callable[[float, float, float], float] = delta
) -> PropertyResult:
    """Delta(w(x)) against a central difference of w, step scaled to the bound distance."""
    lo, hi, x = _random_boxes(rng, samples)
    worst, bad = 0.0, 0
    for a, b, xi in zip(lo, hi, x):
        dx = 1e-4 * min(xi + a, b - xi)
        xp, xm = xi + dx, xi - dx
        fd = (map_state(xp, a, b) - map_state(xm, a, b)) / (xp - xm)
        d = delta_fn(map_state(xi, a, b), a, b)
        err = abs(d - fd) / abs(fd)
        worst = max(worst, err)
        bad += not err < 1e-6
    return PropertyResult("Delta matches dw/dx", samples, bad, worst)


def check_delta_floor(
    rng: np.random.Generator, samples: int, delta_fn: Callable[[float, float, float], float] = delta
) -> PropertyResult:
    lo, hi, x = _random_boxes(rng, samples)
    worst, bad = 0.0, 0
    for a, b, xi in zip(lo, hi, x):
        floor = delta_floor(a, b)
        short = (floor - delta_fn(map_state(xi, a, b), a, b)) / floor
        worst = max(worst, short)
        bad += short > TOL
    return PropertyResult("Delta >= 4/(lower+upper)", samples, bad, worst)


def richardson_ratios(h0: float = 0.1, duration: float = 2.0, halvings: int = 3, g: float = 0.5, x0=(0.3, 0.2)) -> list[float]:
    """Ratios of successive terminal-state differences as h is halved."""
    plant = build_plant("paper-sec4")
    finals = []
    for k in range(halvings + 1):
        h = h0 / 2**k
        finals.append(integrate_plant(plant, x0, g, h, int(round(duration / h))))
    diffs = [np.linalg.norm(finals[k] - finals[k + 1]) for k in range(halvings)]
    return [diffs[k] / diffs[k + 1] for k in range(halvings - 1)]


def linear_plant_error(h: float = 1e-3, duration: float = 1.0, rate: float = 1.0) -> float:
    plant = build_plant("linear-decay", {"rate": rate})
    x = integrate_plant(plant, [1.0], 0.0, h, int(round(duration / h)))
    return abs(float(x[0]) - math.exp(-rate * duration))


def check_integrator() -> list[PropertyResult]:
    ratios = richardson_ratios()
    bad = sum(not 8 <= r <= 32 for r in ratios)
    out = [PropertyResult("RK4 Richardson ratio in [8, 32]", len(ratios), bad, max(ratios), f"ratios {', '.join(f'{r:.2f}' for r in ratios)}")]
    err = linear_plant_error()
    out.append(PropertyResult("linear plant analytic error < 1e-12", 1, int(not err < 1e-12), err))
    return out


def run_battery(samples: int = DEFAULT_SAMPLES, seed: int = 20240611, delta_fn=delta) -> list[PropertyResult]:
    if samples < 1:
        raise ValueError("samples must be positive")
    rng = np.random.default_rng(seed)
    results = [
        check_tanh_gap(rng, samples),
        check_young(rng, samples),
        check_round_trip(rng, samples),
        check_delta_derivative(rng, samples, delta_fn),
        check_delta_floor(rng, samples, delta_fn),
    ]
    results.extend(check_integrator())
    return results
