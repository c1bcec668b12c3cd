"""Uniform-grid function substrate: quadrature, averaging and superposition operators.

Everything downstream (operator catalog, degree engines) works on functions
sampled at the nodes of a uniform grid.  Quadrature is composite trapezoid
throughout so that cumulative integrals, plain integrals and averages are
mutually consistent at the discrete level.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Callable

import numpy as np

if TYPE_CHECKING:
    from .flows import VectorFieldSpec

PERIODIC_CLOSURE_TOL = 1e-10


@dataclass(frozen=True)
class Grid:
    """Uniform grid over [a, b] with m subintervals (m+1 nodes)."""

    a: float
    b: float
    m: int

    def __post_init__(self):
        if not (self.b > self.a):
            raise ValueError(f"grid needs b > a, got [{self.a}, {self.b}]")
        if self.m < 2:
            raise ValueError(f"grid needs m >= 2, got m={self.m}")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.m

    @property
    def nodes(self) -> np.ndarray:
        return self.a + self.h * np.arange(self.m + 1)

    @property
    def length(self) -> float:
        return self.b - self.a


def _as_values(values, m: int) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.ndim != 2 or v.shape[0] != m + 1:
        raise ValueError(f"values must have shape (m+1, n) = ({m + 1}, n), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("grid function values must be finite (no NaN/Inf)")
    return v


@dataclass(frozen=True)
class GridFunction:
    """Vector-valued function sampled at the nodes of a uniform grid.

    ``values`` has shape (m+1, n).  With ``periodic=True`` the first and
    last node values are asserted to agree and index arithmetic downstream
    may wrap modulo m.
    """

    grid: Grid
    values: np.ndarray
    periodic: bool = False

    def __post_init__(self):
        v = _as_values(self.values, self.grid.m)
        if self.periodic:
            gap = np.max(np.abs(v[0] - v[-1]))
            if gap > PERIODIC_CLOSURE_TOL:
                raise ValueError(
                    f"periodic grid function must close up: |x(a)-x(b)| = {gap:.3e}"
                )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def with_values(self, values, periodic: bool | None = None) -> "GridFunction":
        return GridFunction(self.grid, values,
                            self.periodic if periodic is None else periodic)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def __mul__(self, scalar: float) -> "GridFunction":
        return GridFunction(self.grid, float(scalar) * self.values)

    __rmul__ = __mul__


def _check_same_grid(x: GridFunction, y: GridFunction):
    if x.grid != y.grid:
        raise ValueError("grid functions live on different grids")
    if x.dim != y.dim:
        raise ValueError(f"dimension mismatch: {x.dim} vs {y.dim}")


def from_callable(grid: Grid, fn: Callable[[float], np.ndarray], dim: int,
                  periodic: bool = False) -> GridFunction:
    vals = np.array([np.broadcast_to(np.asarray(fn(t), dtype=float), (dim,))
                     for t in grid.nodes])
    return GridFunction(grid, vals, periodic)


def constant(grid: Grid, c, periodic: bool = False) -> GridFunction:
    c = np.atleast_1d(np.asarray(c, dtype=float))
    return GridFunction(grid, np.tile(c, (grid.m + 1, 1)), periodic)


@dataclass(frozen=True)
class DelayKernel:
    """Wrapped delay t -> t - tau (mod T), mapping [0, T] into itself."""

    tau: float
    T: float

    def __post_init__(self):
        if not (self.tau > 0):
            raise ValueError(f"tau must be positive, got {self.tau}")
        if self.tau > self.T:
            raise ValueError(f"tau={self.tau} exceeds T={self.T}")

    def shift_steps(self, grid: Grid) -> int:
        """Number of grid steps in tau; rejects misaligned tau."""
        if abs(grid.a) > 1e-12 or abs(grid.b - self.T) > 1e-12:
            raise ValueError(f"grid [{grid.a}, {grid.b}] does not span [0, {self.T}]")
        ratio = self.tau / grid.h
        k = round(ratio)
        if k == 0 or abs(ratio - k) > 1e-9:
            raise ValueError(
                f"tau={self.tau} is not an integer multiple of the grid step h={grid.h}"
            )
        return k


def cumulative_integral(x: GridFunction) -> GridFunction:
    """V(x)(t) = integral of x from the grid start to t, cumulative trapezoid."""
    h = x.grid.h
    v = np.zeros_like(x.values)
    increments = 0.5 * h * (x.values[:-1] + x.values[1:])
    v[1:] = np.cumsum(increments, axis=0)
    return GridFunction(x.grid, v)


def double_cumulative_integral(x: GridFunction) -> GridFunction:
    """Iterated integral t -> int_0^t int_0^r x(s) ds dr."""
    return cumulative_integral(cumulative_integral(x))


def integral(x: GridFunction) -> np.ndarray:
    """Plain trapezoid integral over the whole grid interval."""
    h = x.grid.h
    return h * (np.sum(x.values, axis=0) - 0.5 * (x.values[0] + x.values[-1]))


def average(x: GridFunction) -> np.ndarray:
    return integral(x) / x.grid.length


def nemytskii(f: "VectorFieldSpec", x: GridFunction) -> GridFunction:
    """Superposition t -> f(t, x(t)) at the grid nodes."""
    if f.dim != x.dim:
        raise ValueError(f"field dim {f.dim} != grid function dim {x.dim}")
    out = np.empty_like(x.values)
    for j, t in enumerate(x.grid.nodes):
        val = np.asarray(f.rhs(t, x.values[j]), dtype=float)
        if not np.all(np.isfinite(val)):
            raise ValueError(f"rhs returned non-finite value at t={t}")
        out[j] = val
    return GridFunction(x.grid, out)


def nemytskii_delay(f: "VectorFieldSpec", x: GridFunction, k: DelayKernel) -> GridFunction:
    """Superposition t -> f(t, x(t), x(r(t))) with the wrapped delay r.

    r(t) = t - tau + T for t < tau and t - tau otherwise; since tau is
    grid-aligned this is an exact index shift.
    """
    if f.dim != x.dim:
        raise ValueError(f"field dim {f.dim} != grid function dim {x.dim}")
    shift = k.shift_steps(x.grid)
    m = x.grid.m
    idx = np.arange(m + 1) - shift
    idx[idx < 0] += m  # r(t) = t - tau + T lands on node j - shift + m
    out = np.empty_like(x.values)
    for j, t in enumerate(x.grid.nodes):
        val = np.asarray(f.rhs(t, x.values[j], x.values[idx[j]]), dtype=float)
        if not np.all(np.isfinite(val)):
            raise ValueError(f"rhs returned non-finite value at t={t}")
        out[j] = val
    return GridFunction(x.grid, out)
