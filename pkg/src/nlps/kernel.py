"""Kac interaction potential and its grid samplings.

The potential is the radial cubic bump

    J(r) = c * (1 - |r|^2 / R^2)^3   for |r| <= R,   0 otherwise,

which is C^2 across ``|r| = R``. Normalizing ``int J = 1`` over the plane
gives ``c = 4 / (pi R^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .grid import Field, GridSpec

__all__ = [
    "KernelSpec",
    "KernelGrids",
    "make_bump_kernel",
    "sample_kernel_grids",
    "displacements",
    "default_radius",
]


def default_radius(length: float) -> float:
    return 0.05 * length


@dataclass(frozen=True)
class KernelSpec:
    radius: float
    norm_const: float

    def value(self, x, y):
        """J evaluated at displacement ``(x, y)`` (broadcasts)."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        q = 1.0 - (x * x + y * y) / (self.radius * self.radius)
        q = np.where(q > 0.0, q, 0.0)
        return self.norm_const * q * q * q

    def gradient(self, x, y):
        """Closed-form ``(dJ/dx, dJ/dy)`` at ``(x, y)``."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        r2 = self.radius * self.radius
        q = 1.0 - (x * x + y * y) / r2
        q = np.where(q > 0.0, q, 0.0)
        g = -6.0 * self.norm_const * q * q / r2
        return g * x, g * y


def make_bump_kernel(radius: float) -> KernelSpec:
    radius = float(radius)
    if not np.isfinite(radius) or radius <= 0.0:
        raise ConfigError(f"kernel.radius must be > 0, got {radius}")
    return KernelSpec(radius=radius, norm_const=4.0 / (math.pi * radius * radius))


@dataclass(frozen=True)
class KernelGrids:
    j_grid: Field
    djx_grid: Field
    djy_grid: Field

    @property
    def spec(self) -> GridSpec:
        return self.j_grid.spec


def displacements(spec: GridSpec) -> np.ndarray:
    """Signed displacement of each index from the origin, wrapped to ``[-L/2, L/2)``."""
    n = spec.n
    idx = np.arange(n)
    return spec.dx * (((idx + n // 2) % n) - n // 2)


def _even(a: np.ndarray, axis: int) -> np.ndarray:
    n = a.shape[axis]
    rev = np.take(a, (-np.arange(n)) % n, axis=axis)
    return 0.5 * (a + rev)


def _odd(a: np.ndarray, axis: int) -> np.ndarray:
    n = a.shape[axis]
    rev = np.take(a, (-np.arange(n)) % n, axis=axis)
    return 0.5 * (a - rev)


def sample_kernel_grids(ks: KernelSpec, spec: GridSpec) -> KernelGrids:
    """Sample J and grad J on the wrap-centered displacement grid.

    ``j_grid`` is rescaled so its Riemann sum is exactly one. The gradient
    grids are de-meaned and then projected onto their exact parity (odd in
    the differentiated direction, even in the other), which removes any
    constant offset again and keeps their spectra purely imaginary.
    """
    if not ks.radius < 0.5 * spec.length:
        raise ConfigError(
            f"kernel radius exceeds half-domain: R={ks.radius} >= L/2={0.5 * spec.length}"
        )
    d = displacements(spec)
    X, Y = np.meshgrid(d, d, indexing="xy")  # [j, i]: X varies along axis 1

    jv = ks.value(X, Y)
    jv = _even(_even(jv, 0), 1)
    jv = jv / (spec.cell_area * jv.sum())

    gx, gy = ks.gradient(X, Y)
    gx = gx - gx.mean()
    gy = gy - gy.mean()
    gx = _even(_odd(gx, 1), 0)
    gy = _even(_odd(gy, 0), 1)

    return KernelGrids(Field(spec, jv), Field(spec, gx), Field(spec, gy))
