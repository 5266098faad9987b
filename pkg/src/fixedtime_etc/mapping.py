"""Logarithmic barrier mapping between constrained states and free coordinates.

A state constrained to ``-lower < x < upper`` is mapped to

    w = ln((lower + x) / (upper - x))

which is one-to-one onto the real line and diverges at both bounds. Its
derivative is

    dw/dx = Delta(w) = (e^w + e^-w + 2) / (lower + upper)
          = (lower + upper) / ((lower + x) (upper - x))

The second form is used wherever ``x`` is at hand since it never overflows.

``kind="symmetric"`` selects the literal variant ``ln((lower + x)/(lower - x))``
(domain ``|x| < lower``) with the same Delta expression, kept only to compare
against the asymmetric map; that Delta is *not* its derivative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, ConstraintViolation, MappingSaturation

W_CAP = 700.0

ASYMMETRIC = "asymmetric"
SYMMETRIC = "symmetric"
MAPPING_KINDS = (ASYMMETRIC, SYMMETRIC)


def _domain(lower: float, upper: float, kind: str) -> tuple[float, float]:
    if kind == SYMMETRIC:
        return lower, lower
    return lower, upper


def map_state(
    x: float,
    lower: float,
    upper: float,
    *,
    index: int = 0,
    time: float | None = None,
    kind: str = ASYMMETRIC,
) -> float:
    """Map a constrained state to its free coordinate.

    Raises ConstraintViolation (carrying ``index`` and ``time``) unless ``x``
    lies strictly inside the interval.
    """
    lo, hi = _domain(lower, upper, kind)
    if not (-lo < x < hi):
        raise ConstraintViolation(index, x, lo, hi, time)
    return math.log((lo + x) / (hi - x))


def unmap_state(
    w: float, lower: float, upper: float, *, kind: str = ASYMMETRIC, return_flag: bool = False
):
    """Inverse of :func:`map_state`.

    Evaluated as ``(upper e^w - lower)/(1 + e^w)`` in a branch that never
    overflows. For ``|w|`` beyond roughly 37 the result rounds onto a bound;
    it is then pulled to the nearest representable interior value and, with
    ``return_flag=True``, reported as ``(x, True)``.
    """
    lo, hi = _domain(lower, upper, kind)
    if w >= 0.0:
        e = math.exp(-w)
        x = (hi - lo * e) / (1.0 + e)
    else:
        e = math.exp(w)
        x = (hi * e - lo) / (1.0 + e)
    clamped = False
    if x >= hi:
        x = math.nextafter(hi, -math.inf)
        clamped = True
    elif x <= -lo:
        x = math.nextafter(-lo, math.inf)
        clamped = True
    return (x, clamped) if return_flag else x


def delta(w: float, lower: float, upper: float) -> float:
    """Jacobian factor Delta(w) = (e^w + e^-w + 2)/(lower + upper)."""
    if not abs(w) <= W_CAP:
        raise MappingSaturation(w, W_CAP)
    return (math.exp(w) + math.exp(-w) + 2.0) / (lower + upper)


def delta_at_state(x: float, lower: float, upper: float) -> float:
    """Delta evaluated from the constrained state (asymmetric map only)."""
    return (lower + upper) / ((lower + x) * (upper - x))


def delta_floor(lower: float, upper: float) -> float:
    """Smallest value Delta can take: 4/(lower + upper), reached at w = 0."""
    return 4.0 / (lower + upper)


@dataclass(frozen=True)
class MappedReference:
    w_s: float
    w_s_dot: float


def map_reference(
    x_r: float, x_r_dot: float, lower: float, upper: float, *, kind: str = ASYMMETRIC
) -> MappedReference:
    """Map the reference through the first state's bounds, with chain-rule rate."""
    try:
        w_s = map_state(x_r, lower, upper, kind=kind)
    except ConstraintViolation as exc:
        raise ConfigError(
            "simulation.reference", f"reference value {x_r!r} leaves the state-1 constraint box"
        ) from exc
    return MappedReference(w_s, delta(w_s, lower, upper) * x_r_dot)


def map_states(
    x: Sequence[float],
    lower: Sequence[float],
    upper: Sequence[float],
    *,
    time: float | None = None,
    kind: str = ASYMMETRIC,
) -> np.ndarray:
    if not (len(x) == len(lower) == len(upper)):
        raise ValueError(f"dimension mismatch: {len(x)} states, {len(lower)}/{len(upper)} bounds")
    return np.array(
        [map_state(xi, lo, hi, index=i, time=time, kind=kind) for i, (xi, lo, hi) in enumerate(zip(x, lower, upper))]
    )


def auxiliary_terms(
    x: Sequence[float], drift: Sequence[float], lower: Sequence[float], upper: Sequence[float]
) -> np.ndarray:
    """Residual terms of the transformed system.

    L_i = Delta_i h_i - w_{i+1} for i < n and L_n = Delta_n h_n, so that
    dw_i/dt = w_{i+1} + L_i and dw_n/dt = Delta_n * (input term) + L_n.
    """
    w = map_states(x, lower, upper)
    d = np.array([delta_at_state(xi, lo, hi) for xi, lo, hi in zip(x, lower, upper)])
    L = d * np.asarray(drift, dtype=float)
    L[:-1] -= w[1:]
    return L
