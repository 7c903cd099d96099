"""Command-line front end: verify | design | converge | diagnose."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from numpy.polynomial import legendre

from . import diagnostics, plotting
from .design import (DesignError, PointInteraction, design_for, design_summary, export_q_csv,
                     interaction_of, write_design_json)
from .gridfn import GridFunction
from .halfbound import BvpData, halfbound_residuals, kernel_determinant, solvability_data, solve_bvp
from .pair import (Check, PairError, PerturbationPair, export_csv, kappa_crosscheck, lattice_from,
                   pair_from_csv, sine_lattice_pair, sine_pair, validate_pair)
from .resolvent import (ResolventError, SweepEntry, SweepSpec, report_from_entries, run_sweep,
                        write_rates_json, write_sweep_csv)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
WINDOWS = ("quartic", "cosine")
FORCINGS = ("gaussian", "box", "zero")


class ConfigError(ValueError):
    pass


def _parse_zeta(z) -> complex:
    if isinstance(z, (list, tuple)) and len(z) == 2:
        val = complex(float(z[0]), float(z[1]))
    elif isinstance(z, (int, float)):
        val = complex(z)
    elif isinstance(z, str):
        try:
            val = complex(z.replace(" ", "").replace("i", "j"))
        except ValueError:
            raise ConfigError(f"cannot parse zeta {z!r}") from None
    else:
        raise ConfigError(f"cannot parse zeta {z!r}")
    if val.imag == 0:
        raise ConfigError(f"zeta = {val} is real; every zeta must be nonreal")
    return val


@dataclass(frozen=True)
class ExperimentConfig:
    pair: str = "sine"
    alpha: float = 2.0
    beta: float = 1.0
    zetas: tuple[complex, ...] = (1j,)
    epsilons: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025, 0.0125)
    n: int = 4001
    fast_n: int = 129
    half_width: float = 15.0
    window: str = "quartic"
    forcing: str = "gaussian"
    seed: int = 42
    max_iter: int = 30
    rtol: float = 1e-3
    alpha_override: float | None = None
    synthetic: dict | None = None
    scattering_k: tuple[float, ...] = tuple(np.round(np.linspace(0.25, 5.0, 20), 10))
    output_dir: str = "out"
    figures: bool = True

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha == 0:
            raise ConfigError("alpha must be finite and nonzero")
        if not np.isfinite(self.beta):
            raise ConfigError("beta must be finite")
        if self.alpha_override is not None and self.alpha_override == 0:
            raise ConfigError("alpha_override must be nonzero")
        eps = np.array(self.epsilons, dtype=float)
        if eps.size == 0 or np.any(eps <= 0) or np.any(eps > 1):
            raise ConfigError("epsilons must lie in (0, 1]")
        if np.any(np.diff(eps) >= 0):
            raise ConfigError("epsilons must be strictly decreasing")
        if not self.zetas:
            raise ConfigError("need at least one zeta")
        if self.n < 5 or self.n % 2 == 0:
            raise ConfigError("grid.n must be odd and >= 5")
        if self.fast_n < 65 or self.fast_n % 2 == 0:
            raise ConfigError("grid.fast_n must be odd and >= 65")
        if self.window not in WINDOWS:
            raise ConfigError(f"window must be one of {WINDOWS}")
        if self.forcing not in FORCINGS:
            raise ConfigError(f"forcing must be one of {FORCINGS}")
        if self.half_width <= 1 + max(self.epsilons):
            raise ConfigError("grid.half_width must exceed 1 + max eps")
        if self.synthetic is not None:
            if set(self.synthetic) != {"constant", "exponent"}:
                raise ConfigError("synthetic needs exactly the keys constant, exponent")
            if self.synthetic["constant"] <= 0:
                raise ConfigError("synthetic constant must be positive")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        grid = d.pop("grid", {}) or {}
        power = d.pop("power_iteration", {}) or {}
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known - {"zeta"}
        extra |= {f"grid.{k}" for k in set(grid) - {"n", "fast_n", "half_width"}}
        extra |= {f"power_iteration.{k}" for k in set(power) - {"max_iter", "rtol"}}
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        kw = {k: v for k, v in d.items() if k in known}
        if "zeta" in d:
            kw["zetas"] = [d["zeta"]]
        try:
            if "zetas" in kw:
                kw["zetas"] = tuple(_parse_zeta(z) for z in kw["zetas"])
            for key in ("epsilons", "scattering_k"):
                if key in kw:
                    kw[key] = tuple(float(e) for e in kw[key])
            for key in ("alpha", "beta", "half_width", "rtol"):
                if key in kw:
                    kw[key] = float(kw[key])
            kw.update({k: v for k, v in grid.items()})
            kw.update({k: v for k, v in power.items()})
            for key in ("n", "fast_n", "seed", "max_iter"):
                if key in kw:
                    if float(kw[key]) != int(kw[key]):
                        raise ConfigError(f"{key} must be an integer")
                    kw[key] = int(kw[key])
            if "half_width" in kw:
                kw["half_width"] = float(kw["half_width"])
            if kw.get("synthetic") is not None:
                kw["synthetic"] = {k: float(v) for k, v in kw["synthetic"].items()}
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["zetas"] = [[z.real, z.imag] for z in self.zetas]
        d["epsilons"] = list(self.epsilons)
        d["scattering_k"] = list(self.scattering_k)
        d["grid"] = {"n": d.pop("n"), "fast_n": d.pop("fast_n"), "half_width": d.pop("half_width")}
        d["power_iteration"] = {"max_iter": d.pop("max_iter"), "rtol": d.pop("rtol")}
        return d


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = ExperimentConfig.from_dict(raw)
    if cfg.pair != "sine" and not Path(cfg.pair).is_absolute():
        cfg = replace(cfg, pair=str(Path(path).parent / cfg.pair))
    return cfg


def _dump(obj, path: Path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, (complex, np.complexfloating)):
        return [float(o.real), float(o.imag)]
    if isinstance(o, np.bool_):
        return bool(o)
    raise TypeError(type(o))


def _zeta_label(z: complex) -> str:
    return f"zeta_{z.real:g}{z.imag:+g}j"


def fine_pair(cfg: ExperimentConfig) -> PerturbationPair:
    if cfg.pair == "sine":
        return sine_pair(cfg.n)
    try:
        return pair_from_csv(cfg.pair)
    except OSError as exc:
        raise ConfigError(f"cannot read pair CSV: {exc}") from None


def fast_pair(cfg: ExperimentConfig, fine: PerturbationPair | None = None) -> PerturbationPair:
    if cfg.pair == "sine":
        return sine_lattice_pair(cfg.fast_n)
    return lattice_from(fine or fine_pair(cfg), cfg.fast_n)


def window_for(cfg: ExperimentConfig, pair: PerturbationPair) -> GridFunction:
    t = pair.grid.x
    if cfg.window == "cosine":
        return GridFunction(pair.grid, np.cos(np.pi * t / 2) ** 2)
    return GridFunction(pair.grid, (1 - t**2) ** 2)


def gaussian_forcing(x):
    return (2 / np.pi) ** 0.25 * np.exp(-np.asarray(x) ** 2)


def box_forcing(x):
    return (np.abs(np.asarray(x)) <= 1).astype(float)


def zero_forcing(x):
    return np.zeros_like(np.asarray(x, dtype=float))


FORCING_RULES = {"gaussian": gaussian_forcing, "box": box_forcing, "zero": zero_forcing}


def bvp_suite(pair: PerturbationPair, seed: int, count: int = 100, degree: int = 4) -> list[Check]:
    rng = np.random.default_rng(seed)
    ends = resid = gdiff = 0.0
    for _ in range(count):
        h = legendre.legval(pair.grid.x, rng.standard_normal(degree + 1))
        h /= pair.norm(h)
        a, b = solvability_data(pair, h)
        sol = solve_bvp(pair, BvpData(GridFunction(pair.grid, h), a, b))
        ends = max(ends, abs(sol.v.values[0]), abs(sol.v.values[-1]))
        resid = max(resid, sol.residual / pair.norm(h))
        gdiff = max(gdiff, abs(sol.g1 - sol.g2) / (1 + pair.norm(h)))
    return [Check("bvp_boundary_values", ends, 1e-8),
            Check("bvp_relative_residual", resid, 1e-6),
            Check("bvp_g1_minus_g2", gdiff, 1e-10)]


def verify_checks(pair: PerturbationPair, seed: int) -> list[Check]:
    checks = list(validate_pair(pair).checks)
    k_om, k_mom = kappa_crosscheck(pair)
    checks.append(Check("kappa_crosscheck", k_om - k_mom, 1e-8))
    r_const, r_omega = halfbound_residuals(pair)
    checks += [Check("B_const", r_const, 1e-10), Check("B_omega_relative", r_omega, 1e-6),
               Check("kernel_determinant", kernel_determinant(pair), 1e-12)]
    sl, sr = pair.calculus.slope_at_ends(pair.omega.values)
    checks += [Check("omega_slope_left", float(sl), 1e-6), Check("omega_slope_right", float(sr), 1e-6)]
    try:
        checks += bvp_suite(pair, seed)
    except ValueError as exc:
        checks.append(Check(f"bvp_suite_error: {exc}", float("inf"), 0.0))
    return checks


def cmd_verify(cfg: ExperimentConfig, out: Path, parallel: int = 1) -> int:
    pair = fine_pair(cfg)
    with np.errstate(all="ignore"):
        checks = verify_checks(pair, cfg.seed)
        try:
            lat = fast_pair(cfg, pair)
            checks += [replace(c, name=f"lattice.{c.name}") for c in validate_pair(lat).checks]
        except PairError as exc:
            checks.append(Check(f"lattice_pair: {exc}", float("inf"), 0.0))
    passed = all(c.passed for c in checks)
    k_om, k_mom = kappa_crosscheck(pair)
    _dump({"passed": passed, "kappa": pair.kappa, "kappa_from_moments": k_mom,
           "n": list(pair.n), "m": list(pair.m), "checks": [c.as_dict() for c in checks]},
          out / "verify.json")
    export_csv(pair, out / "pair.csv")
    if cfg.figures:
        plotting.plot_pair(pair, out / "pair.png")
    for c in checks:
        if not c.passed:
            print(f"FAIL {c.name}: measured {c.measured:.3e} > tolerance {c.tolerance:.1e}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_FAIL


def cmd_design(cfg: ExperimentConfig, out: Path, parallel: int = 1) -> int:
    pair = fine_pair(cfg)
    try:
        q = design_for(pair, cfg.alpha, cfg.beta, window_for(cfg, pair))
        inter = interaction_of(pair, q)
    except DesignError as exc:
        print(f"design rejected: {exc}", file=sys.stderr)
        return EXIT_FAIL
    summary = design_summary(inter, pair.kappa, q)
    write_design_json(summary, out / "design.json")
    export_q_csv(q, out / "q.csv")
    if cfg.figures:
        plotting.plot_potential(q, out / "q.png", f"alpha = {cfg.alpha:g}, beta = {cfg.beta:g}")
    return EXIT_OK


def _fast_design(cfg: ExperimentConfig):
    lat = fast_pair(cfg)
    q = design_for(lat, cfg.alpha, cfg.beta, window_for(cfg, lat))
    return lat, q, interaction_of(lat, q)


def cmd_converge(cfg: ExperimentConfig, out: Path, parallel: int = 1) -> int:
    if len(cfg.epsilons) < 3:
        raise ConfigError("converge needs at least 3 eps values to fit a rate")
    reports = []
    if cfg.synthetic is not None:
        inter = PointInteraction(cfg.alpha, cfg.beta)
        C, p = cfg.synthetic["constant"], cfg.synthetic["exponent"]
        for z in cfg.zetas:
            entries = [SweepEntry(e, C * e**p, 0, False) for e in cfg.epsilons]
            reports.append(report_from_entries(entries, z, inter))
    else:
        try:
            lat, q, inter = _fast_design(cfg)
        except DesignError as exc:
            print(f"design rejected: {exc}", file=sys.stderr)
            return EXIT_FAIL
        for z in cfg.zetas:
            spec = SweepSpec(lat, q.values, inter, z, cfg.half_width, cfg.seed, cfg.max_iter, cfg.rtol)
            reports.append(run_sweep(spec, cfg.epsilons, parallel))
    for rep in reports:
        sub = out / _zeta_label(rep.zeta)
        sub.mkdir(parents=True, exist_ok=True)
        write_sweep_csv(rep, sub / "sweep.csv")
    write_rates_json(reports, out / "rate.json")
    if cfg.figures:
        plotting.plot_convergence(reports, out / "convergence.png")
    ok = True
    for rep in reports:
        warn = sum(e.warn for e in rep.entries)
        print(f"zeta={rep.zeta}: slope {rep.slope:.4f}, r2 {rep.r2:.4f}, decreasing {rep.strictly_decreasing}"
              + (f", {warn} power-iteration warnings" if warn else ""))
        ok &= rep.slope >= 0.45 and rep.strictly_decreasing
    return EXIT_OK if ok else EXIT_FAIL


def _diagnose_task(args):
    lat, q, inter, z, eps, forcing, half_width = args
    return diagnostics.diagnose_eps(lat, q, inter, z, eps, FORCING_RULES[forcing], half_width)


def cmd_diagnose(cfg: ExperimentConfig, out: Path, parallel: int = 1) -> int:
    try:
        lat, q, inter = _fast_design(cfg)
    except DesignError as exc:
        print(f"design rejected: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if cfg.alpha_override is not None:
        inter = PointInteraction(cfg.alpha_override, inter.beta)
    rule = FORCING_RULES[cfg.forcing]
    x = np.linspace(-cfg.half_width, cfg.half_width, 20001)
    f_norm = float(np.sqrt(np.trapezoid(np.abs(rule(x)) ** 2, x)))
    tol = 1e-7 * (f_norm + 1)
    summary = {"alpha": inter.alpha, "beta": inter.beta, "kappa": lat.kappa, "forcing": cfg.forcing,
               "zero_terms_tolerance": tol, "zetas": []}
    ok = True
    for z in cfg.zetas:
        tasks = [(lat, q.values, inter, z, e, cfg.forcing, cfg.half_width) for e in cfg.epsilons]
        if parallel > 1:
            with ProcessPoolExecutor(max_workers=parallel) as pool:
                rows = list(pool.map(_diagnose_task, tasks))
        else:
            rows = [_diagnose_task(t) for t in tasks]
        sub = out / _zeta_label(z)
        sub.mkdir(parents=True, exist_ok=True)
        diagnostics.write_diagnostics_csv(rows, sub / "diagnostics.csv")
        zero = max(r.zero_residual for r in rows)
        passed = zero <= tol
        ok &= passed
        summary["zetas"].append({
            "zeta": [z.real, z.imag], "zero_terms_residual": zero, "zero_terms_pass": passed,
            "max_jump_mismatch": max(r.jump_mismatch for r in rows),
            "max_glue_residual": max(r.glue_residual for r in rows),
            "rows": [asdict(r) for r in rows],
        })
        if cfg.figures:
            plotting.plot_diagnostics(rows, sub / "diagnostics.png", f"zeta = {z:g}")
        if not passed:
            print(f"zeta={z}: zero-terms residual {zero:.3e} exceeds {tol:.1e}", file=sys.stderr)
    table = diagnostics.scattering_table(inter, cfg.scattering_k)
    diagnostics.write_scattering_csv(table, out / "scattering.csv")
    if cfg.figures:
        plotting.plot_scattering(table, out / "scattering.png")
    _dump(summary, out / "diagnostics.json")
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "design": cmd_design, "converge": cmd_converge, "diagnose": cmd_diagnose}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="deltaprime", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", metavar="PATH", help="JSON experiment config")
    parser.add_argument("--out", metavar="DIR", help="output directory (overrides output_dir)")
    parser.add_argument("--seed", type=int, help="random seed (overrides config)")
    parser.add_argument("--parallel", type=int, default=1, metavar="N", help="worker processes for sweeps")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.parallel < 1:
            raise ConfigError("--parallel must be >= 1")
        out = Path(args.out or cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        _dump(cfg.to_dict(), out / "config.json")
        return COMMANDS[args.command](cfg, out, args.parallel)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PairError, ResolventError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
