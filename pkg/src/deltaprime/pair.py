"""The rank-two perturbation pair (phi1, phi2), its resonance function omega and kappa."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
import numpy as np

from .calculus import Calculus, Lattice, Quadrature
from .gridfn import Grid, GridFunction, make_grid_function, unit_interval


class PairError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PerturbationPair:
    calculus: Calculus
    phi: tuple[GridFunction, GridFunction]
    anti1: tuple[GridFunction, GridFunction]
    anti2: tuple[GridFunction, GridFunction]
    n: tuple[float, float]
    m: tuple[float, float]
    omega: GridFunction
    kappa: float

    @property
    def grid(self) -> Grid:
        return self.calculus.grid

    def pairing(self, f, g):
        """Bilinear pairing of two value arrays (no conjugation)."""
        return self.calculus.integrate(np.asarray(f) * np.asarray(g))

    def norm(self, v) -> float:
        return float(np.sqrt(self.calculus.integrate(np.abs(np.asarray(v)) ** 2)))


def pair_from_profiles(phi1, phi2, calculus: Calculus) -> PerturbationPair:
    """Derive antiderivatives, norms, moments, omega and kappa without enforcing anything."""
    grid = calculus.grid
    P = np.array([np.asarray(getattr(p, "values", p), dtype=float) for p in (phi1, phi2)])
    F = calculus.anti1(P)
    G = calculus.anti2(P)
    n1, n2 = (float(np.sqrt(calculus.integrate(Fj**2))) for Fj in F)
    m1, m2 = (float(calculus.integrate(calculus.t * Pj)) for Pj in P)
    omega = n2 * G[0] - n1 * G[1]
    gf = lambda v: GridFunction(grid, v)
    return PerturbationPair(
        calculus=calculus,
        phi=(gf(P[0]), gf(P[1])),
        anti1=(gf(F[0]), gf(F[1])),
        anti2=(gf(G[0]), gf(G[1])),
        n=(n1, n2),
        m=(m1, m2),
        omega=gf(omega),
        kappa=float(omega[-1]),
    )


def _orthonormalize(F: np.ndarray, P: np.ndarray, integrate) -> tuple[np.ndarray, np.ndarray]:
    """Gram-Schmidt on the rows of F, mirrored on P."""
    F, P = F.copy(), P.copy()
    nrm = lambda v: np.sqrt(integrate(v * v))
    n0 = nrm(F[0])
    if n0 < 1e-8:
        raise PairError("first profile is (discretely) zero")
    F[0], P[0] = F[0] / n0, P[0] / n0
    c = integrate(F[1] * F[0])
    F[1], P[1] = F[1] - c * F[0], P[1] - c * P[0]
    n1 = nrm(F[1])
    if n1 < 1e-8:
        raise PairError(f"profiles are linearly dependent (Gram-Schmidt remainder {n1:.3e})")
    scale = np.array([[1.0], [n1]])
    return F / scale, P / scale


def _finish(pair: PerturbationPair) -> PerturbationPair:
    if abs(pair.kappa) < 1e-10:
        raise PairError("free-operator limit, kappa must be nonzero")
    return pair


def build_pair(eta1: GridFunction, eta2: GridFunction) -> PerturbationPair:
    """Pair on the quadrature calculus from two profiles vanishing at +-1."""
    if eta1.grid != eta2.grid:
        raise PairError("eta1 and eta2 live on different grids")
    calc = Quadrature(eta1.grid)
    h = eta1.grid.h
    E = np.array([eta1.values, eta2.values], dtype=float)
    E, _ = _orthonormalize(E, E, calc.integrate)
    P = np.gradient(E, h, axis=1, edge_order=2)
    P -= calc.integrate(P)[:, None] / calc.integrate(np.ones_like(P[0]))
    F, P = _orthonormalize(calc.anti1(P), P, calc.integrate)
    n1, n2 = (np.sqrt(calc.integrate(Fj**2)) for Fj in F)
    P[1] /= n1 * n2
    return _finish(pair_from_profiles(P[0], P[1], calc))


def lattice_pair(eta1, eta2, n: int = 129) -> PerturbationPair:
    """Pair on the lattice calculus of n nodes.

    eta1, eta2 are callables or GridFunctions; they are sampled at the half
    nodes t_k + h/2, and phi is their backward difference.  The first
    antiderivative of phi is then the sampled profile exactly.
    """
    grid = unit_interval(n)
    calc = Lattice(grid)
    half = grid.x + grid.h / 2
    E = np.array([_sample(e, half) for e in (eta1, eta2)], dtype=float)
    E[:, -1] = 0.0
    P = np.diff(E, axis=1, prepend=0.0) / grid.h
    F, P = _orthonormalize(E, P, calc.integrate)
    return _finish(pair_from_profiles(P[0], P[1], calc))


def lattice_from(pair: PerturbationPair, n: int = 129) -> PerturbationPair:
    """Lattice pair on n nodes whose profiles are this pair's first antiderivatives."""
    return lattice_pair(pair.anti1[0], pair.anti1[1], n)


def _sample(profile, s: np.ndarray) -> np.ndarray:
    if isinstance(profile, GridFunction):
        return profile(s)
    return np.asarray(profile(s), dtype=float) * np.ones_like(s)


def sine_profiles(grid: Grid | None = None) -> tuple[GridFunction, GridFunction]:
    grid = grid or unit_interval()
    return (
        make_grid_function(lambda x: sine_eta(1, x), grid),
        make_grid_function(lambda x: sine_eta(2, x), grid),
    )


def sine_eta(j: int, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < 1, np.sin(j * np.pi * (x + 1) / 2), 0.0)


def sine_pair(n: int = 4001) -> PerturbationPair:
    return build_pair(*sine_profiles(unit_interval(n)))


def sine_lattice_pair(n: int = 129) -> PerturbationPair:
    return lattice_pair(lambda s: sine_eta(1, s), lambda s: sine_eta(2, s), n)


def kappa_crosscheck(pair: PerturbationPair) -> tuple[float, float]:
    n1, n2 = pair.n
    m1, m2 = pair.m
    return float(pair.omega.values[-1]), n1 * m2 - n2 * m1


@dataclass(frozen=True)
class Check:
    name: str
    measured: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(abs(self.measured) <= self.tolerance)

    def as_dict(self) -> dict:
        return {"name": self.name, "measured": self.measured, "tolerance": self.tolerance,
                "pass": self.passed}


@dataclass(frozen=True)
class PairValidationReport:
    checks: tuple[Check, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def validate_pair(pair: PerturbationPair) -> PairValidationReport:
    calc = pair.calculus
    P = [p.values for p in pair.phi]
    F = [f.values for f in pair.anti1]
    G = [g.values for g in pair.anti2]
    om = pair.omega.values
    checks = [
        Check("mean_phi1", float(calc.integrate(P[0])), 1e-10),
        Check("mean_phi2", float(calc.integrate(P[1])), 1e-10),
        Check("antiderivative_orthogonality", float(calc.integrate(F[0] * F[1])), 1e-10),
        Check("n1n2_minus_1", pair.n[0] * pair.n[1] - 1.0, 1e-12),
    ]
    for j in (0, 1):
        k = j + 1
        checks += [
            Check(f"phi{k}_anti1_left", float(calc.anti1_left(F[j])), 1e-8),
            Check(f"phi{k}_anti2_left", float(G[j][0]), 1e-8),
            Check(f"phi{k}_anti1_right", float(F[j][-1]), 1e-8),
            Check(f"phi{k}_anti2_right_plus_m{k}", float(G[j][-1] + pair.m[j]), 1e-8),
        ]
    checks += [
        Check("omega_left", float(om[0]), 1e-8),
        Check("omega_right_minus_kappa", float(om[-1] - pair.kappa), 1e-8),
        # measured is 1/|kappa|, so the check fails when kappa is ~0
        Check("kappa_nonzero_inverse", 1.0 / max(abs(pair.kappa), 1e-300), 1e10),
    ]
    return PairValidationReport(tuple(checks))


def export_csv(pair: PerturbationPair, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "phi1", "phi2", "omega"])
        for row in zip(pair.grid.x, pair.phi[0].values, pair.phi[1].values, pair.omega.values):
            w.writerow([repr(float(v)) for v in row])


def read_profiles_csv(path) -> tuple[str, GridFunction, GridFunction]:
    """Read x plus either (eta1, eta2) or (phi1, phi2) columns; returns the kind found."""
    path = Path(path)
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise PairError(f"{path}: no data rows")
    cols = rows[0].keys()
    for kind in ("eta", "phi"):
        if {f"{kind}1", f"{kind}2"} <= set(cols) and "x" in cols:
            break
    else:
        raise PairError(f"{path}: need columns x and eta1,eta2 or phi1,phi2")
    x = np.array([float(r["x"]) for r in rows])
    grid = Grid(float(x[0]), float(x[-1]), len(x))
    if not np.allclose(x, grid.x, rtol=0, atol=1e-9 * grid.h):
        raise PairError(f"{path}: x column is not a uniform grid")
    if grid.left != -1.0 or grid.right != 1.0:
        raise PairError(f"{path}: profiles must be sampled on [-1, 1]")
    a = GridFunction(grid, np.array([float(r[f"{kind}1"]) for r in rows]))
    b = GridFunction(grid, np.array([float(r[f"{kind}2"]) for r in rows]))
    return kind, a, b


def pair_from_csv(path) -> PerturbationPair:
    kind, a, b = read_profiles_csv(path)
    if kind == "eta":
        return build_pair(a, b)
    return pair_from_profiles(a, b, Quadrature(a.grid))

