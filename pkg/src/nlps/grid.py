"""Periodic square grids, cell-averaged fields and initial data.

Fields are stored as ``(n, n)`` float64 arrays indexed ``data[j, i]`` where
``i`` is the x index and ``j`` the y index, so that the row-major flat index
is ``j * n + i``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, InitializationError, SpecMismatchError

__all__ = [
    "GridSpec",
    "Field",
    "State",
    "make_grid",
    "wrap_index",
    "sample_field",
    "random_ternary_init",
    "cell_centers",
]


@dataclass(frozen=True)
class GridSpec:
    n: int
    length: float

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def cell_area(self) -> float:
        dx = self.dx
        return dx * dx

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)


def make_grid(n: int, length: float) -> GridSpec:
    """Validate and build a :class:`GridSpec`."""
    if isinstance(n, bool) or int(n) != n:
        raise ConfigError(f"grid.n must be an integer, got {n!r}")
    n = int(n)
    if n < 4:
        raise ConfigError(f"grid.n must satisfy n >= 4, got {n}")
    length = float(length)
    if not np.isfinite(length) or length <= 0.0:
        raise ConfigError(f"grid.length must be > 0, got {length}")
    return GridSpec(n=n, length=length)


def wrap_index(i: int, n: int) -> int:
    # Python's % is already the non-negative modulo for positive n
    return i % n


@dataclass(frozen=True, eq=False)
class Field:
    """One cell-averaged scalar on a grid."""

    spec: GridSpec
    data: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.array(self.data, dtype=np.float64, order="C", copy=True)
        if arr.shape != self.spec.shape:
            if arr.size == self.spec.n ** 2:
                arr = arr.reshape(self.spec.shape)
            else:
                raise SpecMismatchError(
                    f"field data has {arr.size} entries, expected {self.spec.n ** 2}"
                )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def constant(cls, spec: GridSpec, value: float) -> "Field":
        return cls(spec, np.full(spec.shape, float(value)))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "Field":
        return cls(spec, np.zeros(spec.shape))

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, Field):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class State:
    m: Field
    phi: Field
    time: float = 0.0
    step: int = 0

    def __post_init__(self):
        if self.m.spec != self.phi.spec:
            raise SpecMismatchError("m and phi are defined on different grids")
        if self.time < 0 or self.step < 0:
            raise ValueError("time and step must be non-negative")

    @property
    def spec(self) -> GridSpec:
        return self.m.spec

    def __eq__(self, other):
        if not isinstance(other, State):
            return NotImplemented
        return (
            self.m == other.m
            and self.phi == other.phi
            and self.time == other.time
            and self.step == other.step
        )


def cell_centers(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Midpoint coordinates ``(X, Y)`` as ``(n, n)`` arrays indexed ``[j, i]``."""
    c = (np.arange(spec.n) + 0.5) * spec.dx
    return np.meshgrid(c, c, indexing="xy")


def sample_field(f: Callable[[float, float], float], spec: GridSpec) -> Field:
    """Approximate cell averages of ``f`` by its values at cell midpoints.

    ``f`` is called on the full coordinate arrays first; scalar functions that
    do not broadcast are evaluated cell by cell.
    """
    X, Y = cell_centers(spec)
    try:
        vals = np.asarray(f(X, Y), dtype=np.float64)
        if vals.shape != spec.shape:
            vals = np.broadcast_to(vals, spec.shape).copy()
    except (TypeError, ValueError):
        vals = np.empty(spec.shape)
        for j in range(spec.n):
            for i in range(spec.n):
                vals[j, i] = float(f(X[j, i], Y[j, i]))
    bad = np.argwhere(~np.isfinite(vals))
    if bad.size:
        j, i = (int(v) for v in bad[0])
        raise InitializationError(
            f"non-finite sample at cell (i={i}, j={j}), "
            f"x={X[j, i]:.6g}, y={Y[j, i]:.6g}"
        )
    return Field(spec, vals)


def random_ternary_init(solvent_ratio: float, seed: int, spec: GridSpec) -> State:
    """Random spin configuration with the given solvent fraction.

    Each cell independently receives spin 0 with probability ``s`` and +1 or
    -1 with probability ``(1 - s) / 2`` each; then ``m = sigma`` and
    ``phi = |sigma|``. Uniform draws come from numpy's PCG64 bit generator
    seeded with ``seed`` and are consumed in flat index order ``j * n + i``,
    one draw per cell, so the result depends only on ``(seed, s, n)``.
    """
    s = float(solvent_ratio)
    if not (0.0 <= s <= 1.0):
        raise ConfigError(f"init.solvent_ratio must lie in [0, 1], got {s}")
    rng = np.random.Generator(np.random.PCG64(int(seed) & 0xFFFFFFFFFFFFFFFF))
    u = rng.random(spec.n * spec.n)
    plus_cut = s + 0.5 * (1.0 - s)
    sigma = np.where(u < s, 0.0, np.where(u < plus_cut, 1.0, -1.0))
    sigma = sigma.reshape(spec.shape)
    return State(Field(spec, sigma), Field(spec, np.abs(sigma)), 0.0, 0)
