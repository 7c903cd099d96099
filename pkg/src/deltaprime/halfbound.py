"""The nonlocal operator B u = -u'' + (phi2, u) phi1 + (phi1, u) phi2 on [-1, 1],
its half-bound states 1 and omega, and the Neumann problem B v = h."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .gridfn import GridFunction
from .pair import PerturbationPair


class SolvabilityError(ValueError):
    def __init__(self, msg: str, residuals: tuple[float, float]):
        super().__init__(msg)
        self.residuals = residuals


@dataclass(frozen=True, eq=False)
class BvpData:
    h: GridFunction
    a: complex
    b: complex


@dataclass(frozen=True, eq=False)
class BvpSolution:
    v: GridFunction
    g1: complex
    g2: complex
    residual: float

    @property
    def norm(self) -> float:
        w = self.v.grid.simpson_weights
        return float(np.sqrt(np.sum(w * np.abs(self.v.values) ** 2)))


def _vals(u) -> np.ndarray:
    return np.asarray(getattr(u, "values", u))


def _B(pair: PerturbationPair, u: np.ndarray, left=0.0, right=0.0, order: int = 2) -> np.ndarray:
    p1, p2 = pair.phi[0].values, pair.phi[1].values
    d2 = pair.calculus.d2(u, left, right, order=order)
    return -d2 + pair.pairing(p2, u) * p1 + pair.pairing(p1, u) * p2


def apply_B(pair: PerturbationPair, u) -> GridFunction:
    return GridFunction(pair.grid, _B(pair, _vals(u)))


def halfbound_residuals(pair: PerturbationPair) -> tuple[float, float]:
    one = np.ones(pair.grid.n)
    om = pair.omega.values
    return pair.norm(_B(pair, one)), pair.norm(_B(pair, om)) / pair.norm(om)


def kernel_determinant(pair: PerturbationPair) -> float:
    n1, n2 = pair.n
    return n1**2 * n2**2 - 1.0


def solvability_data(pair: PerturbationPair, h) -> tuple:
    hv = _vals(h)
    om = pair.omega.values / pair.kappa
    return pair.pairing(1 - om, hv), -pair.pairing(om, hv)


def solvability_residuals(pair: PerturbationPair, data: BvpData) -> tuple[float, float]:
    hv = data.h.values
    a_ref, _ = solvability_data(pair, hv)
    return abs(data.a - data.b - pair.pairing(np.ones_like(hv), hv)), abs(data.a - a_ref)


def solve_bvp(pair: PerturbationPair, data: BvpData) -> BvpSolution:
    """Closed-form solution with v(-1) = v(1) = 0."""
    hv = data.h.values
    r = solvability_residuals(pair, data)
    tol = 1e-8 * (1 + pair.norm(hv))
    if max(r) > tol:
        raise SolvabilityError(f"solvability violated: residuals {r[0]:.3e}, {r[1]:.3e} > {tol:.1e}", r)
    calc = pair.calculus
    (n1, n2), (m1, m2) = pair.n, pair.m
    p1, p2 = pair.phi[0].values, pair.phi[1].values
    a, b = data.a, data.b
    H = calc.anti2(hv)
    g1 = n2 * (a * m1 - pair.pairing(p1, H))
    g2 = n1 * (a * m2 - pair.pairing(p2, H))
    v0 = n2 * g1 * pair.anti2[0].values - H + a * calc.t
    v = v0 + a - (v0[-1] + a) / pair.kappa * pair.omega.values
    eq = -_B(pair, v, a, b, order=4) + hv
    return BvpSolution(GridFunction(pair.grid, v), g1, g2, pair.norm(-eq))


def w2_norm(pair: PerturbationPair, v) -> float:
    vv = _vals(v)
    return pair.norm(vv) + pair.norm(pair.calculus.d2(vv))


def export_bvp_csv(sol: BvpSolution, path) -> None:
    v = sol.v.values
    cplx = np.iscomplexobj(v)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "v_re", "v_im"] if cplx else ["t", "v"])
        for t, val in zip(sol.v.grid.x, v):
            w.writerow([repr(float(t)), repr(float(val.real)), repr(float(val.imag))] if cplx
                       else [repr(float(t)), repr(float(val))])
