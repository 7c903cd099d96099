"""Two discrete calculi on [-1, 1] sharing one interface.

`Quadrature` approximates the continuum: Simpson weights, a 4th-order
cumulative rule and central differences.  `Lattice` is the fast-scale
model used inside the eps-operator: uniform node weights, cumulative sums
and a three-point Laplacian with ghost nodes.  Summation by parts holds
exactly on the lattice, so pair hypotheses survive to round-off there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gridfn import Grid, cumulative_cubic


@dataclass(frozen=True)
class Quadrature:
    grid: Grid
    name = "quadrature"

    @property
    def t(self) -> np.ndarray:
        return self.grid.x

    @property
    def weights(self) -> np.ndarray:
        return self.grid.simpson_weights

    def integrate(self, v):
        return np.sum(self.weights * v, axis=-1)

    def anti1(self, v: np.ndarray) -> np.ndarray:
        return cumulative_cubic(v, self.grid.h)

    def anti2(self, v: np.ndarray) -> np.ndarray:
        return cumulative_cubic(cumulative_cubic(v, self.grid.h), self.grid.h)

    def anti1_left(self, F: np.ndarray):
        return F[0]

    def d2(self, v: np.ndarray, left_slope=0.0, right_slope=0.0, order: int = 2) -> np.ndarray:
        # slopes are ignored: one-sided stencils close the ends
        h2 = self.grid.h**2
        out = np.empty_like(v)
        if order == 2:
            out[1:-1] = v[2:] - 2 * v[1:-1] + v[:-2]
            out[0] = 2 * v[0] - 5 * v[1] + 4 * v[2] - v[3]
            out[-1] = 2 * v[-1] - 5 * v[-2] + 4 * v[-3] - v[-4]
            return out / h2
        if order == 4:
            out[2:-2] = (-v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]) / 12
            end = np.array([45, -154, 214, -156, 61, -10]) / 12
            near = np.array([10, -15, -4, 14, -6, 1]) / 12
            out[0] = end @ v[:6]
            out[1] = near @ v[:6]
            out[-1] = end @ v[:-7:-1]
            out[-2] = near @ v[:-7:-1]
            return out / h2
        raise ValueError("order must be 2 or 4")

    def slope_at_ends(self, v: np.ndarray) -> tuple:
        s = np.array([-25, 48, -36, 16, -3]) / (12 * self.grid.h)
        return s @ v[:5], -(s @ v[:-6:-1])


@dataclass(frozen=True)
class Lattice:
    grid: Grid
    name = "lattice"

    @property
    def t(self) -> np.ndarray:
        return self.grid.x

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.grid.n, self.grid.h)

    def integrate(self, v):
        return self.grid.h * np.sum(v, axis=-1)

    def anti1(self, v: np.ndarray) -> np.ndarray:
        # F_k lives at t_k + h/2
        return self.grid.h * np.cumsum(v, axis=-1)

    def anti2(self, v: np.ndarray) -> np.ndarray:
        F = self.anti1(v)
        out = np.zeros_like(F)
        out[..., 1:] = self.grid.h * np.cumsum(F[..., :-1], axis=-1)
        return out

    def anti1_left(self, F: np.ndarray):
        # ghost value at t_0 - h/2
        return 0.0 * F[0]

    def d2(self, v: np.ndarray, left_slope=0.0, right_slope=0.0, order: int = 2) -> np.ndarray:
        h = self.grid.h
        ext = np.empty(v.shape[0] + 2, dtype=np.result_type(v, left_slope, right_slope))
        ext[1:-1] = v
        ext[0] = v[0] - h * left_slope
        ext[-1] = v[-1] + h * right_slope
        return (ext[2:] - 2 * ext[1:-1] + ext[:-2]) / h**2

    def slope_at_ends(self, v: np.ndarray) -> tuple:
        h = self.grid.h
        return (v[1] - v[0]) / h, (v[-1] - v[-2]) / h


Calculus = Quadrature | Lattice
