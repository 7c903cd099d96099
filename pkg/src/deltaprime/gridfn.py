"""Sampled functions on uniform grids: quadrature, antiderivatives, rescaling."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np


class GridError(ValueError):
    pass


@dataclass(frozen=True)
class Grid:
    left: float
    right: float
    n: int

    def __post_init__(self):
        if not (np.isfinite(self.left) and np.isfinite(self.right)):
            raise GridError("grid endpoints must be finite")
        if self.n < 3 or self.n % 2 == 0:
            raise GridError(f"grid needs an odd point count >= 3, got {self.n}")
        if self.right <= self.left:
            raise GridError("grid needs right > left")

    @property
    def h(self) -> float:
        return (self.right - self.left) / (self.n - 1)

    @cached_property
    def x(self) -> np.ndarray:
        x = np.linspace(self.left, self.right, self.n)
        x.flags.writeable = False
        return x

    @cached_property
    def simpson_weights(self) -> np.ndarray:
        w = np.full(self.n, 2.0)
        w[1:-1:2] = 4.0
        w[0] = w[-1] = 1.0
        w *= self.h / 3
        w.flags.writeable = False
        return w

    def covers(self, a: float, b: float) -> bool:
        tol = 1e-12 * max(1.0, abs(self.left), abs(self.right))
        return self.left - tol <= a and b <= self.right + tol


def unit_interval(n: int = 4001) -> Grid:
    return Grid(-1.0, 1.0, n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Values on a grid; `support` is a half-open index range [lo, hi) outside which values are 0."""

    grid: Grid
    values: np.ndarray
    support: tuple[int, int] | None = field(default=None)

    def __post_init__(self):
        vals = np.array(self.values, copy=True)
        if vals.ndim != 1 or vals.shape[0] != self.grid.n:
            raise GridError(f"expected {self.grid.n} values, got shape {vals.shape}")
        if not np.iscomplexobj(vals):
            vals = vals.astype(float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if self.support is not None:
            lo, hi = self.support
            if np.any(vals[:lo] != 0) or np.any(vals[hi:] != 0):
                raise GridError("values are nonzero outside the support hint")

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.grid, values)

    def __call__(self, s) -> np.ndarray:
        """Piecewise-linear evaluation, zero outside the grid."""
        return _interp(np.asarray(s, dtype=float), self.grid.x, self.values)


def _support_of(values: np.ndarray) -> tuple[int, int]:
    nz = np.flatnonzero(values)
    if nz.size == 0:
        return (0, 0)
    return (int(nz[0]), int(nz[-1]) + 1)


def make_grid_function(rule: Callable, grid: Grid) -> GridFunction:
    x = grid.x
    with np.errstate(all="ignore"):
        try:
            vals = np.asarray(rule(x))
            if vals.shape != x.shape:
                vals = np.broadcast_to(vals, x.shape)
        except (TypeError, ValueError):
            vals = np.array([rule(xi) for xi in x])
    bad = ~np.isfinite(vals)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise GridError(f"rule produced {vals[i]} at x[{i}] = {x[i]!r}")
    return GridFunction(grid, vals, _support_of(vals))


def _same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.grid != g.grid:
        raise GridError(f"grid mismatch: {f.grid} vs {g.grid}")


def inner_product(f: GridFunction, g: GridFunction):
    _same_grid(f, g)
    val = np.sum(f.grid.simpson_weights * f.values * np.conj(g.values))
    return val if np.iscomplexobj(val) else float(val)


def norm(f: GridFunction) -> float:
    return float(np.sqrt(np.sum(f.grid.simpson_weights * np.abs(f.values) ** 2)))


def cumulative_trapezoid(v: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(v)
    out[..., 1:] = np.cumsum(v[..., 1:] + v[..., :-1], axis=-1) * (h / 2)
    return out


def cumulative_cubic(v: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral with a four-point cubic per interval, 4th order."""
    if v.shape[-1] < 4:
        return cumulative_trapezoid(v, h)
    inc = np.empty(v.shape[:-1] + (v.shape[-1] - 1,), dtype=v.dtype)
    inc[..., 1:-1] = -v[..., :-3] + 13 * v[..., 1:-2] + 13 * v[..., 2:-1] - v[..., 3:]
    inc[..., 0] = 9 * v[..., 0] + 19 * v[..., 1] - 5 * v[..., 2] + v[..., 3]
    inc[..., -1] = v[..., -4] - 5 * v[..., -3] + 19 * v[..., -2] + 9 * v[..., -1]
    out = np.zeros_like(v)
    out[..., 1:] = np.cumsum(inc, axis=-1) * (h / 24)
    return out


_CUMULATIVE = {"trapezoid": cumulative_trapezoid, "cubic": cumulative_cubic}


def antiderivative(f: GridFunction, order: int = 1, method: str = "trapezoid") -> GridFunction:
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    try:
        rule = _CUMULATIVE[method]
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None
    out = rule(f.values, f.grid.h)
    if order == 2:
        out = rule(out, f.grid.h)
    return GridFunction(f.grid, out)


def _interp(s: np.ndarray, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(v):
        return np.interp(s, x, v.real, 0.0, 0.0) + 1j * np.interp(s, x, v.imag, 0.0, 0.0)
    return np.interp(s, x, v, 0.0, 0.0)


def rescale_to_fast(f: GridFunction, eps: float, fast: Grid) -> GridFunction:
    if eps <= 0:
        raise GridError("eps must be positive")
    lo, hi = eps * fast.left, eps * fast.right
    if not f.grid.covers(lo, hi):
        raise GridError(f"x-grid [{f.grid.left}, {f.grid.right}] does not cover [{lo}, {hi}]")
    s = np.clip(eps * fast.x, f.grid.left, f.grid.right)
    return GridFunction(fast, _interp(s, f.grid.x, f.values))
