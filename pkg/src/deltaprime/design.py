"""Moments (a0, a1, a2) of the coupling potential, the (alpha, beta) they produce,
and synthesis of a windowed q hitting prescribed moments."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np

from .gridfn import GridFunction
from .pair import PerturbationPair


class DesignError(ValueError):
    pass


@dataclass(frozen=True)
class PointInteraction:
    alpha: float
    beta: float

    def __post_init__(self):
        if self.alpha == 0 or not np.isfinite(self.alpha):
            raise DesignError("alpha must be finite and nonzero")
        if not np.isfinite(self.beta):
            raise DesignError("beta must be finite")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.alpha, self.beta], [0.0, 1.0 / self.alpha]])


@dataclass(frozen=True, eq=False)
class CouplingPotential:
    q: GridFunction
    moments: tuple[float, float, float]
    gram_residual: float = 0.0

    @property
    def values(self) -> np.ndarray:
        return self.q.values


def potential_moments(pair: PerturbationPair, q) -> tuple[float, float, float]:
    qv = np.asarray(getattr(q, "values", q))
    om = pair.omega.values
    return tuple(float(pair.pairing(qv, om**k)) for k in range(3))


def coupling_from_values(pair: PerturbationPair, q) -> CouplingPotential:
    qf = q if isinstance(q, GridFunction) else GridFunction(pair.grid, q)
    return CouplingPotential(qf, potential_moments(pair, qf))


def excluded_family_message(alpha: float) -> str:
    if alpha == 1:
        return ("unreachable regime: beta = 0 with alpha = 1 is the free operator, "
                "which needs kappa = 0 and is excluded")
    return ("unreachable regime: beta = 0 with alpha != 1 is excluded; the interface matrix "
            f"diag({alpha:g}, {1 / alpha:g}) arises only from delta'-like potentials, "
            "a mechanism outside this model")


def moments_for_target(alpha: float, beta: float, kappa: float) -> tuple[float, float, float]:
    if alpha == 0:
        raise DesignError("alpha must be nonzero")
    if kappa == 0:
        raise DesignError("kappa must be nonzero")
    if beta == 0:
        raise DesignError(excluded_family_message(alpha))
    if alpha == 1:
        return (0.0, 0.0, kappa**2 / beta)
    ab = alpha * beta
    return ((1 - alpha) ** 2 / ab, kappa * (1 - alpha) / ab, kappa**2 / ab)


def alphabeta_of(a0: float, a1: float, a2: float, kappa: float) -> PointInteraction:
    if a2 == 0:
        raise DesignError("a2 = 0: alpha undefined")
    gap = a2 - kappa * a1
    if abs(gap) <= 1e-14 * max(abs(a2), abs(kappa * a1)):
        raise DesignError("degenerate: alpha undefined (a2 = kappa*a1)")
    if abs(a0 * a2 - a1**2) > 1e-10 * max(1.0, a1**2):
        raise DesignError(f"hypothesis (ii) violated: a0*a2 - a1^2 = {a0 * a2 - a1**2:.3e}")
    return PointInteraction(gap / a2, kappa**2 / gap)


def default_window(pair: PerturbationPair) -> GridFunction:
    t = pair.grid.x
    return GridFunction(pair.grid, (1 - t**2) ** 2)


def synthesize_q(pair: PerturbationPair, target, window: GridFunction | None = None) -> CouplingPotential:
    w = (window if window is not None else default_window(pair)).values
    a = np.asarray(target, dtype=float)
    om = pair.omega.values
    powers = np.array([om**k for k in range(5)])
    mom = np.array([pair.pairing(w, p) for p in powers])
    G = np.array([[mom[j + k] for k in range(3)] for j in range(3)])
    cond = np.linalg.cond(G)
    if cond > 1e12:
        raise DesignError(f"omega too close to constant on supp w (Gram condition {cond:.2e})")
    c = np.linalg.solve(G, a)
    c += np.linalg.solve(G, a - G @ c)  # one refinement step
    q = (c[0] + c[1] * om + c[2] * om**2) * w
    qf = GridFunction(pair.grid, q)
    moments = potential_moments(pair, qf)
    resid = float(np.linalg.norm(G @ c - a))
    return CouplingPotential(qf, moments, resid)


def design_for(pair: PerturbationPair, alpha: float, beta: float, window=None) -> CouplingPotential:
    return synthesize_q(pair, moments_for_target(alpha, beta, pair.kappa), window)


def interaction_of(pair: PerturbationPair, q: CouplingPotential) -> PointInteraction:
    return alphabeta_of(*q.moments, pair.kappa)


def export_q_csv(q: CouplingPotential, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "q"])
        for x, v in zip(q.q.grid.x, q.values):
            w.writerow([repr(float(x)), repr(float(v))])


def design_summary(interaction: PointInteraction, kappa: float, q: CouplingPotential) -> dict:
    a0, a1, a2 = q.moments
    return {"alpha": interaction.alpha, "beta": interaction.beta, "kappa": kappa,
            "a0": a0, "a1": a1, "a2": a2, "gram_residual": q.gram_residual}


def write_design_json(summary: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
