"""Backstepping laws on the mapped coordinates.

    z_1 = w_1 - w_s,  z_i = w_i - alpha_{i-1}

    alpha_1 = -k1_1 z_1^(2q-1) - z_1 phi_1 |Omega_1|^2 / (2 u_1^2) + dw_s/dt
    alpha_i = -k1_i z_i^(2q-1) - z_i phi_i |Omega_i|^2 / (2 u_i^2)
    alpha_n = (-k1_n z_n^(2q-1) - z_n phi_n |Omega_n|^2 / (2 u_n^2)) / Delta_n

Fractional powers are odd: ``x^r`` means ``sign(x) |x|^r``. The time
derivative of each virtual law is never formed; it is part of the lumped
unknown that the RBF term dominates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mapping import ASYMMETRIC, delta, delta_at_state, map_state
from .rbf import RbfNetwork, phi_hat_rate


def signed_power(x: float, r: float) -> float:
    if x == 0.0:
        return 0.0
    return math.copysign(abs(x) ** r, x)


def alpha_1(z1, phi1, omega_energy, ws_dot, k11, u1, q) -> float:
    return -k11 * signed_power(z1, 2 * q - 1) - z1 * phi1 * omega_energy / (2 * u1 * u1) + ws_dot


def alpha_i(zi, phii, omega_energy, k1i, ui, q) -> float:
    return -k1i * signed_power(zi, 2 * q - 1) - zi * phii * omega_energy / (2 * ui * ui)


def alpha_n(zn, phin, omega_energy, delta_n, k1n, un, q) -> float:
    return alpha_i(zn, phin, omega_energy, k1n, un, q) / delta_n


def tracking_errors(w: Sequence[float], w_s: float, alphas: Sequence[float]) -> np.ndarray:
    """z_1 = w_1 - w_s and z_i = w_i - alpha_{i-1}; ``alphas`` holds alpha_1..alpha_{n-1}."""
    w = np.asarray(w, dtype=float)
    if len(alphas) < len(w) - 1:
        raise ValueError("need alpha_1..alpha_{n-1}")
    z = np.empty_like(w)
    z[0] = w[0] - w_s
    for i in range(1, len(w)):
        z[i] = w[i] - alphas[i - 1]
    return z


def regressor_dim(step: int) -> int:
    """Length of Z_i for 1-based step ``i``: 3 for step 1, 2i+1 after."""
    return 3 if step == 1 else 2 * step + 1


def build_regressor(step: int, w: Sequence[float], w_s: float, ws_dot: float, phi_hat: Sequence[float]) -> np.ndarray:
    """Z_1 = [w_1, w_s, dw_s]; Z_i = [w_1..w_i, w_s, dw_s, phi_1..phi_{i-1}] for i >= 2."""
    if step < 1:
        raise ValueError("steps are numbered from 1")
    if step == 1:
        return np.array([w[0], w_s, ws_dot])
    return np.concatenate([np.asarray(w[:step], float), [w_s, ws_dot], np.asarray(phi_hat[: step - 1], float)])


@dataclass
class ControlComputation:
    w: np.ndarray
    w_s: float
    ws_dot: float
    z: np.ndarray
    alpha: np.ndarray  # alpha_1..alpha_n; the last entry is the unsaturated control
    delta_n: float
    omega_energy: np.ndarray  # |Omega_i(Z_i)|^2 per step
    phi_rates: np.ndarray
    regressors: list = field(default_factory=list)
    d: float = math.nan  # adaptive signal, filled in by the simulator

    @property
    def control(self) -> float:
        return float(self.alpha[-1])

    def diagnostics(self) -> dict[str, float]:
        out = {"w_s": self.w_s, "ws_dot": self.ws_dot, "delta_n": self.delta_n}
        for i in range(len(self.z)):
            out[f"z{i + 1}"] = float(self.z[i])
            out[f"alpha{i + 1}"] = float(self.alpha[i])
            out[f"omega_energy{i + 1}"] = float(self.omega_energy[i])
            out[f"phi_rate{i + 1}"] = float(self.phi_rates[i])
        return out


class BacksteppingController:
    """Evaluates every law and adaptive rate for one (t, x, phi_hat) point."""

    def __init__(self, lower, upper, k1, q, u, eps, tau, networks: Sequence[RbfNetwork], mapping: str = ASYMMETRIC):
        self.lower = tuple(lower)
        self.upper = tuple(upper)
        self.n = len(self.lower)
        self.k1 = tuple(k1)
        self.q = q
        self.u = tuple(u)
        self.eps = tuple(eps)
        self.tau = tuple(tau)
        self.networks = list(networks)
        self.mapping = mapping
        if len(self.networks) != self.n:
            raise ValueError("one RBF network per step is required")
        for i, net in enumerate(self.networks):
            if net.dim != regressor_dim(i + 1):
                raise ValueError(f"network {i + 1} has dim {net.dim}, regressor has {regressor_dim(i + 1)}")

    def compute(self, x, phi_hat, w_s: float, ws_dot: float, *, time: float | None = None) -> ControlComputation:
        n, lo, hi = self.n, self.lower, self.upper
        w = np.array([map_state(x[i], lo[i], hi[i], index=i, time=time, kind=self.mapping) for i in range(n)])
        z = np.empty(n)
        alpha = np.empty(n)
        energy = np.empty(n)
        regs = []
        ref = w_s
        for i in range(n):
            z[i] = w[i] - ref
            Z = build_regressor(i + 1, w, w_s, ws_dot, phi_hat)
            regs.append(Z)
            energy[i] = self.networks[i].energy(Z)
            a = alpha_i(z[i], phi_hat[i], energy[i], self.k1[i], self.u[i], self.q)
            if i == 0:
                a += ws_dot
            alpha[i] = a
            ref = a
        if self.mapping == ASYMMETRIC:
            dn = delta_at_state(x[-1], lo[-1], hi[-1])
        else:
            dn = delta(w[-1], lo[-1], hi[-1])
        alpha[-1] /= dn
        rates = np.array(
            [phi_hat_rate(z[i], energy[i], self.eps[i], self.u[i], self.tau[i], phi_hat[i]) for i in range(n)]
        )
        return ControlComputation(w, w_s, ws_dot, z, alpha, dn, energy, rates, regs)
