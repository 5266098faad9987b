"""Scalar inequalities the stability argument leans on, as checkable functions."""

from __future__ import annotations

import numpy as np

TANH_GAP_FACTOR = 0.2785


def tanh_gap(eta1, eta2):
    """|eta1| - eta1 tanh(eta1/eta2); lies in [0, 0.2785 eta2] for eta2 > 0."""
    eta1 = np.asarray(eta1, dtype=float)
    return np.abs(eta1) - eta1 * np.tanh(eta1 / eta2)


def young_product(x, y, r1, r2):
    return np.abs(x) ** r1 * np.abs(y) ** r2


def young_bound(x, y, r1, r2, r3):
    """Weighted Young bound on |x|^r1 |y|^r2 for r1, r2, r3 > 0."""
    s = r1 + r2
    return (r1 / s) * r3 * np.abs(x) ** s + (r2 / s) * r3 ** (-r1 / r2) * np.abs(y) ** s


def young_bound_printed(x, y, r1, r2, r3):
    """Coefficient layout r1 r2/(r1+r2) and r1 r3^(-r1/r2)/(r1+r2).

    Kept for comparison only: it fails e.g. at r1 = r2 = 0.1, r3 = 1, x = y = 1.
    """
    s = r1 + r2
    return (r1 * r2 / s) * np.abs(x) ** s + (r1 * r3 ** (-r1 / r2) / s) * np.abs(y) ** s
