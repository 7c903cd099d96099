"""Two-scale approximation of the eps-resolvent: inner half-bound profile plus a
Neumann corrector, the jumps it leaves at +-eps, the gluing corrector, and the
residual of the glued function.  Also closed-form scattering for the limit."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .design import PointInteraction
from .gridfn import GridFunction, rescale_to_fast
from .halfbound import BvpData, BvpSolution, solve_bvp
from .pair import PerturbationPair
from .resolvent import LimitOperator, LineProblem, eps_operator, line_problem


def build_psi(pair: PerturbationPair, u_minus, u_plus) -> GridFunction:
    om = pair.omega.values
    return GridFunction(pair.grid, u_minus + (u_plus - u_minus) / pair.kappa * om.astype(complex))


@dataclass(frozen=True)
class XiEta:
    xi: complex
    eta: complex
    zero_terms: tuple[complex, complex]
    short: tuple[complex, complex]

    @property
    def zero_residual(self) -> float:
        return float(max(abs(z) for z in self.zero_terms))


def xi_eta(pair: PerturbationPair, q, psi, f_fast, eps: float, du_minus, du_plus) -> XiEta:
    qv = np.asarray(getattr(q, "values", q))
    pv = np.asarray(getattr(psi, "values", psi))
    fv = np.asarray(getattr(f_fast, "values", f_fast))
    om = pair.omega.values / pair.kappa
    z_xi = pair.pairing(om - 1, qv * pv) - du_minus
    z_eta = pair.pairing(qv * om, pv) - du_plus
    s_xi = eps * pair.pairing(1 - om, fv)
    s_eta = -eps * pair.pairing(om, fv)
    return XiEta(z_xi + s_xi, z_eta + s_eta, (z_xi, z_eta), (s_xi, s_eta))


@dataclass(frozen=True)
class Jumps:
    """Jumps at -eps and +eps of the value and of the first derivative."""

    y_minus: complex
    y_plus: complex
    dy_minus: complex
    dy_plus: complex

    def as_tuple(self) -> tuple:
        return (self.y_minus, self.y_plus, self.dy_minus, self.dy_plus)

    @property
    def total(self) -> float:
        return float(sum(abs(j) for j in self.as_tuple()))


def w0(s):
    s = np.asarray(s, dtype=float)
    return np.where((s >= 0) & (s <= 1), (1 - s) ** 2 * (1 + 2 * s), 0.0)


def w1(s):
    s = np.asarray(s, dtype=float)
    return np.where((s >= 0) & (s <= 1), s * (1 - s) ** 2, 0.0)


@dataclass(frozen=True, eq=False)
class Corrector:
    rho: GridFunction
    left: tuple[complex, complex]
    right: tuple[complex, complex]


def corrector(jumps: Jumps, eps: float, grid) -> Corrector:
    x = grid.x
    tol = 0.5 * grid.h
    sl = np.where(x < -eps - tol, -x - eps, -1.0)
    sr = np.where(x > eps + tol, x - eps, -1.0)
    rho = (jumps.y_minus * w0(sl) - jumps.dy_minus * w1(sl)
           - jumps.y_plus * w0(sr) - jumps.dy_plus * w1(sr))
    return Corrector(GridFunction(grid, rho.astype(complex)),
                     (jumps.y_minus, jumps.dy_minus), (-jumps.y_plus, -jumps.dy_plus))


@dataclass(frozen=True, eq=False)
class ApproximateSolution:
    eps: float
    u: np.ndarray
    traces: dict
    psi: GridFunction
    bvp: BvpSolution
    functionals: XiEta
    jumps: Jumps
    jumps_direct: Jumps
    y: GridFunction
    rho: Corrector
    Y: GridFunction
    outer_traces: dict
    glue_residual: float

    @property
    def xi(self):
        return self.functionals.xi

    @property
    def eta(self):
        return self.functionals.eta

    @property
    def v(self) -> GridFunction:
        return self.bvp.v


def _lattice_ghost_slopes(pair: PerturbationPair, z: np.ndarray, rhs: np.ndarray) -> tuple:
    """Outward end slopes of z implied by the lattice equation B z = rhs at the end nodes."""
    d = pair.grid.h
    p1, p2 = pair.phi[0].values, pair.phi[1].values
    Pz = pair.pairing(p2, z) * p1 + pair.pairing(p1, z) * p2
    ghost_l = d**2 * (Pz[0] - rhs[0]) + 2 * z[0] - z[1]
    ghost_r = d**2 * (Pz[-1] - rhs[-1]) + 2 * z[-1] - z[-2]
    return (z[0] - ghost_l) / d, (ghost_r - z[-1]) / d


def build_y_eps(pair: PerturbationPair, q, problem: LineProblem, interaction: PointInteraction,
                eps: float, f) -> ApproximateSolution:
    if pair.calculus.name != "lattice":
        raise ValueError("the two-scale construction needs a lattice pair")
    fv = np.asarray(getattr(f, "values", f), dtype=complex)
    f_line = GridFunction(problem.grid, fv)
    h = problem.h
    lim = LimitOperator(interaction, problem)
    full = lim.solve_full(fv)
    u = lim._drop(full)
    tr = lim.traces(full)
    psi = build_psi(pair, tr["u_minus"], tr["u_plus"])
    f_fast = rescale_to_fast(f_line, eps, pair.grid)
    fn = xi_eta(pair, q, psi, f_fast, eps, tr["du_minus"], tr["du_plus"])
    qv = np.asarray(getattr(q, "values", q))
    rhs = eps * f_fast.values - qv * psi.values
    a = tr["du_minus"] + fn.xi
    b = tr["du_plus"] + fn.eta
    bvp = solve_bvp(pair, BvpData(GridFunction(pair.grid, rhs), a, b))
    z = psi.values + eps * bvp.v.values

    K = (pair.grid.n - 1) // 2
    i, j = problem.center - K, problem.center + K
    outer = {
        "u_minus": u[i], "u_plus": u[j],
        "du_minus": (3 * u[i] - 4 * u[i - 1] + u[i - 2]) / (2 * h),
        "du_plus": (-3 * u[j] + 4 * u[j + 1] - u[j + 2]) / (2 * h),
    }
    jumps = Jumps(
        tr["u_minus"] - outer["u_minus"],
        outer["u_plus"] - tr["u_plus"],
        tr["du_minus"] - outer["du_minus"] + fn.xi,
        outer["du_plus"] - tr["du_plus"] - fn.eta,
    )
    s_l, s_r = _lattice_ghost_slopes(pair, z, eps * rhs)
    direct = Jumps(z[0] - outer["u_minus"], outer["u_plus"] - z[-1],
                   s_l / eps - outer["du_minus"], outer["du_plus"] - s_r / eps)

    y = u.copy()
    y[i:j + 1] = z
    rho = corrector(jumps, eps, problem.grid)
    Y = y + rho.rho.values
    glue = max(
        abs(z[0] - (outer["u_minus"] + rho.left[0])),
        abs(s_l / eps - (outer["du_minus"] + rho.left[1])),
        abs((outer["u_plus"] + rho.right[0]) - z[-1]),
        abs((outer["du_plus"] + rho.right[1]) - s_r / eps),
    )
    return ApproximateSolution(eps, u, tr, psi, bvp, fn, jumps, direct,
                               GridFunction(problem.grid, y), rho, GridFunction(problem.grid, Y),
                               outer, float(glue))


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    y_minus_u: float


def residual_check(pair: PerturbationPair, q, problem: LineProblem, eps: float, f,
                   approx: ApproximateSolution) -> ResidualReport:
    op = eps_operator(pair, q, problem, eps)
    fv = np.asarray(getattr(f, "values", f), dtype=complex)
    Y = approx.Y.values
    return ResidualReport(problem.norm(op.apply(Y) - fv), problem.norm(Y - approx.u))


@dataclass(frozen=True)
class DiagnosticRow:
    epsilon: float
    jump_sum: float
    xi: float
    eta: float
    residual: float
    y_minus_u: float
    zero_residual: float
    trace_gap: float
    jump_mismatch: float
    glue_residual: float


def diagnose_eps(pair: PerturbationPair, q, interaction: PointInteraction, zeta: complex, eps: float,
                 forcing, half_width: float = 15.0) -> DiagnosticRow:
    """One row of the diagnostic sweep; `forcing` maps line nodes to f values."""
    problem = line_problem(eps, pair.grid, zeta, half_width)
    f = np.asarray(forcing(problem.grid.x), dtype=complex) * np.ones(problem.grid.n)
    ap = build_y_eps(pair, q, problem, interaction, eps, f)
    rep = residual_check(pair, q, problem, eps, f, ap)
    tr, out = ap.traces, ap.outer_traces
    trace_gap = sum(abs(out[k] - tr[k]) for k in ("u_minus", "u_plus", "du_minus", "du_plus"))
    mismatch = max(abs(p - r) for p, r in zip(ap.jumps.as_tuple(), ap.jumps_direct.as_tuple()))
    return DiagnosticRow(eps, ap.jumps.total, abs(ap.xi), abs(ap.eta), rep.residual, rep.y_minus_u,
                         ap.functionals.zero_residual, float(trace_gap), float(mismatch),
                         ap.glue_residual)


DIAGNOSTIC_COLUMNS = ["epsilon", "jump_sum", "xi", "eta", "residual", "y_minus_u"]


def write_diagnostics_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(DIAGNOSTIC_COLUMNS)
        for r in rows:
            w.writerow([repr(float(getattr(r, c))) for c in DIAGNOSTIC_COLUMNS])


def scattering_coeffs(interaction: PointInteraction, k: float) -> tuple[complex, complex]:
    alpha, beta = interaction.alpha, interaction.beta
    if alpha == 0:
        raise ValueError("alpha must be nonzero")
    if k <= 0:
        raise ValueError("k must be positive")
    den = 1 + alpha**2 - 1j * k * alpha * beta
    return (1 - alpha**2 - 1j * k * alpha * beta) / den, 2 * alpha / den


SCATTERING_COLUMNS = ["k", "re_r", "im_r", "re_t", "im_t", "unitarity_defect"]


def scattering_table(interaction: PointInteraction, ks) -> list[dict]:
    rows = []
    for k in ks:
        r, t = scattering_coeffs(interaction, float(k))
        rows.append({"k": float(k), "re_r": r.real, "im_r": r.imag, "re_t": t.real, "im_t": t.imag,
                     "unitarity_defect": abs(r) ** 2 + abs(t) ** 2 - 1.0})
    return rows


def write_scattering_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCATTERING_COLUMNS)
        for r in rows:
            w.writerow([repr(float(r[c])) for c in SCATTERING_COLUMNS])
