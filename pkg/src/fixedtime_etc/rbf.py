"""Radial-basis-function regressors and the scalar adaptive norm estimate.

Each backstepping step lumps its unknown dynamics into one function that an
RBF network could represent. Instead of adapting the weight vector, the
controller adapts a single scalar estimate of its squared norm, driven by
``z**2 * |Omega|**2``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

UNSQUARED = "unsquared"
SQUARED = "squared"
BASIS_KINDS = (UNSQUARED, SQUARED)


@dataclass(frozen=True, eq=False)
class RbfNetwork:
    """Fixed Gaussian-type basis: centers ``(m, dim)`` and a common width.

    ``kind="unsquared"`` gives exp(-|W - Z_i| / D); ``kind="squared"`` the
    conventional exp(-|W - Z_i|^2 / D^2).
    """

    centers: np.ndarray
    width: float
    kind: str = UNSQUARED

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.centers, dtype=float))
        if c.shape[0] < 1:
            raise ValueError("an RBF network needs at least one center")
        if not np.all(np.isfinite(c)):
            raise ValueError("RBF centers must be finite")
        if not self.width > 0:
            raise ValueError(f"RBF width must be positive, got {self.width!r}")
        if self.kind not in BASIS_KINDS:
            raise ValueError(f"unknown basis kind {self.kind!r}")
        c.setflags(write=False)
        object.__setattr__(self, "centers", c)

    @property
    def m(self) -> int:
        return self.centers.shape[0]

    @property
    def dim(self) -> int:
        return self.centers.shape[1]

    def basis(self, W) -> np.ndarray:
        return basis(W, self)

    def energy(self, W) -> float:
        """Omega(W)^T Omega(W)."""
        om = basis(W, self)
        return float(om @ om)


def basis(W, net: RbfNetwork) -> np.ndarray:
    W = np.asarray(W, dtype=float)
    if W.shape != (net.dim,):
        raise ValueError(f"regressor has shape {W.shape}, network expects ({net.dim},)")
    diff = net.centers - W
    sq = np.einsum("ij,ij->i", diff, diff)
    if net.kind == SQUARED:
        return np.exp(-sq / net.width**2)
    return np.exp(-np.sqrt(sq) / net.width)


def lattice_centers(
    dim: int, per_dim: int = 7, low: float = -3.0, high: float = 3.0, max_centers: int = 343
) -> np.ndarray:
    """Uniform lattice over ``[low, high]^dim``.

    The per-coordinate count is reduced until the lattice has at most
    ``max_centers`` points (7 per axis in 3-D gives 343; in 5-D it drops to
    3 per axis, 243 points).
    """
    if dim < 1:
        raise ValueError("lattice dimension must be >= 1")
    k = per_dim
    while k > 1 and k**dim > max_centers:
        k -= 1
    axis = np.linspace(low, high, k) if k > 1 else np.array([(low + high) / 2.0])
    return np.array(list(itertools.product(axis, repeat=dim)), dtype=float)


def phi_hat_rate(z: float, omega_energy: float, eps: float, u: float, tau: float, phi_hat: float) -> float:
    """d(phi_hat)/dt = eps/(2 u^2) * z^2 * Omega^T Omega - tau * phi_hat.

    ``omega_energy`` is Omega^T Omega (pass ``basis(...) @ basis(...)``).
    """
    return eps / (2.0 * u * u) * z * z * omega_energy - tau * phi_hat


def phi_hat_equilibrium(z: float, omega_energy: float, eps: float, u: float, tau: float) -> float:
    return eps * z * z * omega_energy / (2.0 * u * u * tau)
