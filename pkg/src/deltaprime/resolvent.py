"""Resolvents of the eps-operator and of the limit point interaction on a truncated line,
the operator-norm gap between them, and log-log rate fits."""

from __future__ import annotations

import csv
import json
import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy import stats
from scipy.linalg import lapack
from scipy.sparse.linalg import splu

from .design import CouplingPotential, PointInteraction
from .gridfn import Grid, GridFunction
from .pair import PerturbationPair


class ResolventError(ValueError):
    pass


def decay_rate(zeta: complex) -> complex:
    """sqrt(-zeta) on the branch with positive real part."""
    k = np.sqrt(-complex(zeta))
    return -k if k.real < 0 else k


@dataclass(frozen=True, eq=False)
class LineProblem:
    grid: Grid
    zeta: complex
    V: np.ndarray | None = None
    check_truncation: bool = True

    def __post_init__(self):
        z = complex(self.zeta)
        object.__setattr__(self, "zeta", z)
        if z.imag == 0:
            raise ResolventError("zeta must be nonreal")
        if abs(self.grid.left + self.grid.right) > 1e-12 * self.half_width:
            raise ResolventError("line grid must be symmetric about 0")
        if self.check_truncation and self.half_width < 5 / decay_rate(z).real:
            raise ResolventError(
                f"half-width {self.half_width:g} < 5/Re sqrt(-zeta) = {5 / decay_rate(z).real:.3g}")
        if self.V is not None:
            V = np.asarray(self.V, dtype=float)
            if V.shape != (self.grid.n,):
                raise ResolventError("V must be sampled on the line grid")
            if V[0] != 0 or V[-1] != 0:
                raise ResolventError("supp V must lie inside (-L, L)")
            object.__setattr__(self, "V", V)

    @property
    def half_width(self) -> float:
        return self.grid.right

    @property
    def h(self) -> float:
        return self.grid.h

    @property
    def center(self) -> int:
        return (self.grid.n - 1) // 2

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.grid.n, self.h)
        w[0] = w[-1] = self.h / 2
        return w

    def norm(self, v) -> float:
        v = np.asarray(getattr(v, "values", v))
        return float(np.sqrt(np.sum(self.weights * np.abs(v) ** 2)))

    def with_zeta(self, zeta: complex) -> "LineProblem":
        return LineProblem(self.grid, zeta, self.V, self.check_truncation)

    def potential(self) -> np.ndarray:
        return np.zeros(self.grid.n) if self.V is None else self.V


def line_problem(eps: float, fast: Grid, zeta: complex, half_width: float = 15.0,
                 V=None, check_truncation: bool = True) -> LineProblem:
    """Line grid with spacing eps*fast.h whose nodes contain eps*fast.x."""
    h = eps * fast.h
    M = math.ceil(half_width / h - 1e-9)
    grid = Grid(-M * h, M * h, 2 * M + 1)
    if callable(V):
        V = V(grid.x)
    return LineProblem(grid, zeta, V, check_truncation)


def uniform_problem(half_width: float, n: int, zeta: complex, V=None,
                    check_truncation: bool = True) -> LineProblem:
    grid = Grid(-half_width, half_width, n)
    if callable(V):
        V = V(grid.x)
    return LineProblem(grid, zeta, V, check_truncation)


@dataclass(frozen=True, eq=False)
class ResolventSolve:
    u: GridFunction
    traces: dict
    residual: float
    condition: float


def _vals(f) -> np.ndarray:
    return np.asarray(getattr(f, "values", f), dtype=complex)


class EpsOperator:
    """Discrete S_eps - zeta: tridiagonal part plus the weighted rank-two term.

    `phi` holds the two profiles and `q` the coupling potential, all sampled
    on the fast lattice whose nodes t_k sit at x = eps*t_k on the line.
    """

    def __init__(self, problem: LineProblem, eps: float, fast: Grid, phi, q):
        if not 0 < eps <= 1:
            raise ResolventError("eps must lie in (0, 1]")
        if fast.n - 1 < 64:
            raise ResolventError(f"eps is under-resolved: {fast.n} fast nodes, need at least 65")
        h = problem.h
        if abs(h - eps * fast.h) > 1e-9 * h:
            raise ResolventError(f"line spacing {h:g} != eps*fast spacing {eps * fast.h:g}")
        K = (fast.n - 1) // 2
        c = problem.center
        if c - K < 3 or c + K > problem.grid.n - 4:
            raise ResolventError("line grid too short for [-eps, eps]")
        self.problem, self.eps, self.fast = problem, eps, fast
        self._inputs = (phi, q)
        self.window = slice(c - K, c + K + 1)
        zeta = problem.zeta
        k = decay_rate(zeta)
        N = problem.grid.n
        diag = np.full(N, 2 / h**2 - zeta, dtype=complex) + problem.potential()
        diag[self.window] += np.asarray(q, dtype=float) / eps
        diag[0] += 2 * k / h
        diag[-1] += 2 * k / h
        up = np.full(N - 1, -1 / h**2, dtype=complex)
        lo = up.copy()
        up[0] = lo[-1] = -2 / h**2
        self.diag, self.up, self.lo = diag, up, lo
        U = np.zeros((N, 2))
        U[self.window, 0] = phi[0]
        U[self.window, 1] = phi[1]
        self.U = U
        self.coupling = h / eps**3
        self._lu = lapack.zgttrf(lo, diag, up)
        if self._lu[-1] != 0:
            raise ResolventError("tridiagonal factorization failed")
        self.Z = self._tsolve(U.astype(complex))
        C = (eps**3 / h) * np.array([[0.0, 1.0], [1.0, 0.0]]) + U.T @ self.Z
        s = np.linalg.svd(C, compute_uv=False)
        if s[-1] <= 1e-14 * s[0]:
            raise ResolventError(f"capacitance matrix singular (sigma ratio {s[-1] / s[0]:.2e}); "
                                 "eps sits on a discrete resonance")
        self.C = C
        self.condition = float(s[0] / s[-1])

    def _tsolve(self, b: np.ndarray) -> np.ndarray:
        dl, d, du, du2, ipiv, _ = self._lu
        x, info = lapack.zgttrs(dl, d, du, du2, ipiv, b)
        return x

    def solve(self, f) -> np.ndarray:
        y = self._tsolve(_vals(f))
        return y - self.Z @ np.linalg.solve(self.C, self.U.T @ y)

    def apply(self, y) -> np.ndarray:
        y = np.asarray(y)
        out = self.diag * y
        out[:-1] += self.up * y[1:]
        out[1:] += self.lo * y[:-1]
        u1, u2 = self.U[:, 0], self.U[:, 1]
        return out + self.coupling * (u1 * (u2 @ y) + u2 * (u1 @ y))

    def dense(self) -> np.ndarray:
        A = np.diag(self.diag) + np.diag(self.up, 1) + np.diag(self.lo, -1)
        u1, u2 = self.U[:, 0], self.U[:, 1]
        return A + self.coupling * (np.outer(u1, u2) + np.outer(u2, u1))

    def adjoint(self) -> "EpsOperator":
        """W-adjoint: the same operator at conj(zeta)."""
        p = self.problem.with_zeta(np.conj(self.problem.zeta))
        return EpsOperator(p, self.eps, self.fast, *self._inputs)

    def traces(self, u: np.ndarray) -> dict:
        h = self.problem.h
        i, j = self.window.start, self.window.stop - 1
        return {"u_minus": u[i], "u_plus": u[j],
                "du_minus": (u[i + 1] - u[i - 1]) / (2 * h), "du_plus": (u[j + 1] - u[j - 1]) / (2 * h)}


def eps_operator(pair: PerturbationPair, q, problem: LineProblem, eps: float) -> EpsOperator:
    qv = getattr(q, "values", q)
    return EpsOperator(problem, eps, pair.grid, (pair.phi[0].values, pair.phi[1].values), qv)


def eps_resolvent(pair: PerturbationPair, q: CouplingPotential, problem: LineProblem, eps: float,
                  f) -> ResolventSolve:
    op = eps_operator(pair, q, problem, eps)
    fv = _vals(f)
    u = op.solve(fv)
    res = problem.norm(op.apply(u) - fv)
    return ResolventSolve(GridFunction(problem.grid, u), op.traces(u), res, op.condition)


class LimitOperator:
    """Finite differences on [-L, 0] and [0, L] with node 0 duplicated.

    Unknowns: line nodes left of 0, then u(-0), u(+0), then nodes right of 0.
    Interface rows use one-sided second-order slopes.
    """

    def __init__(self, interaction: PointInteraction, problem: LineProblem):
        self.interaction, self.problem = interaction, problem
        h, N, m = problem.h, problem.grid.n, problem.center
        zeta = problem.zeta
        alpha, beta = interaction.alpha, interaction.beta
        k = decay_rate(zeta)
        V = problem.potential()
        n = N + 1
        ix = np.concatenate([np.arange(m + 1), np.arange(m + 1, N) + 1])  # line node -> unknown
        rows, cols, vals = [], [], []

        def add(r, c, v):
            r, c, v = np.broadcast_arrays(np.atleast_1d(r), np.atleast_1d(c), np.asarray(v, dtype=complex))
            rows.append(r)
            cols.append(c)
            vals.append(v)

        left = np.arange(1, m)
        right = np.arange(m + 1, N - 1)
        for nodes in (left, right):
            r = ix[nodes]
            add(r, r, 2 / h**2 - zeta + V[nodes])
            add(r, r - 1, -1 / h**2)
            add(r, r + 1, -1 / h**2)
        add(0, 0, 2 / h**2 + 2 * k / h - zeta + V[0])
        add(0, 1, -2 / h**2)
        add(n - 1, n - 1, 2 / h**2 + 2 * k / h - zeta + V[-1])
        add(n - 1, n - 2, -2 / h**2)
        um, up = m, m + 1
        Dm = ([um, um - 1, um - 2], np.array([3, -4, 1]) / (2 * h))
        Dp = ([up, up + 1, up + 2], np.array([-3, 4, -1]) / (2 * h))
        add(um, up, 1.0)
        add(um, um, -alpha)
        add(um, Dm[0], -beta * Dm[1])
        add(up, Dp[0], Dp[1])
        add(up, Dm[0], -Dm[1] / alpha)
        A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
        A.sum_duplicates()
        self.A, self.ix, self.n, self.m = A, ix, n, m
        self._Dm, self._Dp = Dm, Dp
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error")
                self._lu = splu(A)
        except (RuntimeError, sp.linalg.MatrixRankWarning) as exc:
            raise ResolventError(f"limit system is singular: {exc}") from exc

    def _lift(self, f: np.ndarray) -> np.ndarray:
        b = np.zeros(self.n, dtype=complex)
        b[self.ix] = f
        b[self.m] = b[self.m + 1] = 0.0
        return b

    def _drop(self, u: np.ndarray) -> np.ndarray:
        out = u[self.ix].copy()
        out[self.m] = 0.5 * (u[self.m] + u[self.m + 1])
        return out

    def _drop_T(self, y: np.ndarray) -> np.ndarray:
        b = np.zeros(self.n, dtype=complex)
        b[self.ix] = y
        b[self.m] = b[self.m + 1] = 0.5 * y[self.m]
        return b

    def _lift_T(self, b: np.ndarray) -> np.ndarray:
        out = b[self.ix].copy()
        out[self.m] = 0.0
        return out

    def solve_full(self, f) -> np.ndarray:
        return self._lu.solve(self._lift(_vals(f)))

    def solve(self, f) -> np.ndarray:
        return self._drop(self.solve_full(f))

    def solve_adjoint(self, g) -> np.ndarray:
        """Exact adjoint of `solve` in the W-weighted inner product."""
        w = self.problem.weights
        return self._lift_T(self._lu.solve(self._drop_T(w * _vals(g)), trans="H")) / w

    def traces(self, full: np.ndarray) -> dict:
        return {"u_minus": full[self.m], "u_plus": full[self.m + 1],
                "du_minus": self._Dm[1] @ full[self._Dm[0]],
                "du_plus": self._Dp[1] @ full[self._Dp[0]]}

    def residual(self, full: np.ndarray, f) -> float:
        r = self.A @ full - self._lift(_vals(f))
        w = np.full(self.n, self.problem.h)
        return float(np.sqrt(np.sum(w * np.abs(r) ** 2)))

    def condition(self) -> float:
        from scipy.sparse.linalg import LinearOperator, onenormest
        n = self.n
        inv = LinearOperator((n, n), matvec=self._lu.solve, rmatvec=lambda b: self._lu.solve(b, trans="H"),
                             dtype=complex)
        return float(onenormest(self.A) * onenormest(inv))


def limit_resolvent(interaction: PointInteraction, problem: LineProblem, f) -> ResolventSolve:
    op = LimitOperator(interaction, problem)
    full = op.solve_full(f)
    return ResolventSolve(GridFunction(problem.grid, op._drop(full)), op.traces(full),
                          op.residual(full, f), op.condition())


@dataclass(frozen=True)
class GapEstimate:
    gap: float
    iterations: int
    warn: bool


def operator_gap(apply_d, apply_d_adj, weights: np.ndarray, seed: int = 42, max_iter: int = 30,
                 rtol: float = 1e-3) -> GapEstimate:
    """Power iteration on D*D; returns ||D x|| for the final unit vector x."""
    nrm = lambda v: float(np.sqrt(np.sum(weights * np.abs(v) ** 2)))
    rng = np.random.default_rng(seed)
    n = weights.shape[0]
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    x /= nrm(x)
    old = None
    for it in range(1, max_iter + 1):
        y = apply_d(x)
        s = nrm(y)
        if s == 0.0:
            return GapEstimate(0.0, it, False)
        if old is not None and abs(s - old) < rtol * s:
            return GapEstimate(s, it, False)
        old = s
        z = apply_d_adj(y)
        nz = nrm(z)
        if nz == 0.0:
            return GapEstimate(s, it, False)
        x = z / nz
    return GapEstimate(s, max_iter, True)


def resolvent_gap(pair: PerturbationPair, q, interaction: PointInteraction, problem: LineProblem,
                  eps: float, seed: int = 42, max_iter: int = 30, rtol: float = 1e-3) -> GapEstimate:
    op = eps_operator(pair, q, problem, eps)
    op_adj = op.adjoint()
    lim = LimitOperator(interaction, problem)
    return operator_gap(lambda x: op.solve(x) - lim.solve(x),
                        lambda y: op_adj.solve(y) - lim.solve_adjoint(y),
                        problem.weights, seed, max_iter, rtol)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float


def fit_rate(entries) -> RateFit:
    entries = list(entries)
    if len(entries) < 3:
        raise ResolventError("rate fit needs at least 3 (eps, gap) entries")
    eps = np.array([e for e, _ in entries], dtype=float)
    gaps = np.array([g for _, g in entries], dtype=float)
    if np.any(gaps <= 0) or np.any(eps <= 0):
        raise ResolventError("rate fit needs positive eps and gap values")
    fit = stats.linregress(np.log(eps), np.log(gaps))
    return RateFit(float(fit.slope), float(fit.intercept), float(fit.rvalue**2))


@dataclass(frozen=True)
class SweepEntry:
    epsilon: float
    gap: float
    iterations: int
    warn: bool


@dataclass(frozen=True)
class ConvergenceReport:
    entries: tuple[SweepEntry, ...]
    fit: RateFit
    zeta: complex
    alpha: float
    beta: float

    @property
    def slope(self) -> float:
        return self.fit.slope

    @property
    def intercept(self) -> float:
        return self.fit.intercept

    @property
    def r2(self) -> float:
        return self.fit.r2

    @property
    def gaps(self) -> np.ndarray:
        return np.array([e.gap for e in self.entries])

    @property
    def strictly_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.gaps) < 0))

    def rate_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2,
                "zeta": [self.zeta.real, self.zeta.imag], "alpha": self.alpha, "beta": self.beta}


@dataclass(frozen=True)
class SweepSpec:
    """Everything one eps task needs; picklable for process pools."""

    pair: PerturbationPair
    q: np.ndarray
    interaction: PointInteraction
    zeta: complex
    half_width: float = 15.0
    seed: int = 42
    max_iter: int = 30
    rtol: float = 1e-3
    V: object = field(default=None)


def _gap_task(args) -> SweepEntry:
    spec, eps = args
    problem = line_problem(eps, spec.pair.grid, spec.zeta, spec.half_width, spec.V)
    g = resolvent_gap(spec.pair, spec.q, spec.interaction, problem, eps, spec.seed,
                      spec.max_iter, spec.rtol)
    return SweepEntry(float(eps), g.gap, g.iterations, g.warn)


def run_sweep(spec: SweepSpec, epsilons, parallel: int = 1) -> ConvergenceReport:
    epsilons = sorted((float(e) for e in epsilons), reverse=True)
    tasks = [(spec, e) for e in epsilons]
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            entries = list(pool.map(_gap_task, tasks))
    else:
        entries = [_gap_task(t) for t in tasks]
    return report_from_entries(entries, spec.zeta, spec.interaction)


def report_from_entries(entries, zeta: complex, interaction: PointInteraction) -> ConvergenceReport:
    entries = tuple(sorted(entries, key=lambda e: -e.epsilon))
    fit = fit_rate([(e.epsilon, e.gap) for e in entries])
    return ConvergenceReport(entries, fit, complex(zeta), interaction.alpha, interaction.beta)


def write_sweep_csv(report: ConvergenceReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epsilon", "gap", "iterations", "warn"])
        for e in report.entries:
            w.writerow([repr(e.epsilon), repr(e.gap), e.iterations, int(e.warn)])


def write_rates_json(reports, path) -> None:
    with open(path, "w") as fh:
        json.dump([r.rate_dict() for r in reports], fh, indent=2)
        fh.write("\n")
