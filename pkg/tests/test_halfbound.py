import numpy as np
import pytest
from numpy.polynomial import legendre

from deltaprime.gridfn import GridFunction
from deltaprime.halfbound import (BvpData, SolvabilityError, apply_B, export_bvp_csv,
                                  halfbound_residuals, kernel_determinant, solvability_data,
                                  solve_bvp, w2_norm)
from deltaprime.pair import pair_from_profiles


def _rhs(pair, rng, degree=4):
    h = legendre.legval(pair.grid.x, rng.standard_normal(degree + 1))
    return h / pair.norm(h)


def _solve(pair, h):
    a, b = solvability_data(pair, h)
    return solve_bvp(pair, BvpData(GridFunction(pair.grid, h), a, b))


def test_constant_is_a_half_bound_state(sine):
    r = apply_B(sine, np.ones(sine.grid.n))
    assert sine.norm(r.values) <= 1e-10 * sine.norm(sine.phi[0].values)


def test_omega_is_a_half_bound_state(sine):
    assert sine.norm(apply_B(sine, sine.omega).values) <= 1e-6


def test_B_of_x_is_moment_combination(sine):
    x = sine.grid.x
    r = apply_B(sine, x).values
    target = sine.m[1] * sine.phi[0].values + sine.m[0] * sine.phi[1].values
    assert np.max(np.abs(r - target)) < sine.grid.h**2


def test_residuals_and_refinement(sine, sine_fine):
    r_const, r_om = halfbound_residuals(sine)
    assert r_const < 1e-6 and r_om < 1e-6
    _, r_fine = halfbound_residuals(sine_fine)
    assert r_om / r_fine >= 3.5


def test_hypothesis_violation_breaks_kernel(sine):
    bad = pair_from_profiles(sine.phi[0], 2 * sine.phi[1].values, sine.calculus)
    assert halfbound_residuals(bad)[1] > 1e-2


def test_kernel_matrix_is_degenerate(sine, lattice):
    assert abs(kernel_determinant(sine)) < 1e-12
    assert abs(kernel_determinant(lattice)) < 1e-12


def test_solvability_data_examples(sine):
    assert solvability_data(sine, np.zeros(sine.grid.n)) == (0.0, 0.0)
    om = sine.omega.values
    a, b = solvability_data(sine, om)
    n2 = sine.norm(om) ** 2
    assert a == pytest.approx(sine.pairing(np.ones_like(om), om) - n2 / sine.kappa, abs=1e-12)
    assert b == pytest.approx(-n2 / sine.kappa, abs=1e-12)


def test_first_solvability_condition(sine, rng):
    for _ in range(10):
        h = _rhs(sine, rng)
        a, b = solvability_data(sine, h)
        assert abs(a - b - sine.pairing(np.ones_like(h), h)) < 1e-10


def test_homogeneous_problem_has_zero_solution(sine):
    sol = _solve(sine, np.zeros(sine.grid.n))
    assert np.all(sol.v.values == 0)


def test_phi1_right_hand_side(sine):
    sol = _solve(sine, sine.phi[0].values)
    assert sol.residual < 1e-6
    assert abs(sol.v.values[0]) < 1e-8 and abs(sol.v.values[-1]) < 1e-8


def test_constant_right_hand_side_consistency(sine):
    sol = _solve(sine, np.ones(sine.grid.n))
    assert abs(sol.g2 - sol.g1) < 1e-10


def test_random_right_hand_sides(sine, rng):
    for _ in range(100):
        h = _rhs(sine, rng)
        sol = _solve(sine, h)
        assert abs(sol.g1 - sol.g2) <= 1e-10 * (1 + sine.norm(h))
        assert sol.residual <= 1e-6 * sine.norm(h)
        assert max(abs(sol.v.values[0]), abs(sol.v.values[-1])) < 1e-8


def test_complex_right_hand_side(sine, rng):
    h = _rhs(sine, rng) + 1j * _rhs(sine, rng)
    sol = _solve(sine, h)
    assert sol.residual <= 1e-6 * sine.norm(h)
    assert np.iscomplexobj(sol.v.values)


def test_linearity(sine, rng):
    h1, h2 = _rhs(sine, rng), _rhs(sine, rng)
    v1, v2, v12 = _solve(sine, h1).v.values, _solve(sine, h2).v.values, _solve(sine, h1 + h2).v.values
    assert np.max(np.abs(v12 - v1 - v2)) <= 1e-9 * np.max(np.abs(v12))


def test_bounded_solution_operator(sine, sine_fine):
    ratios = []
    for pair in (sine, sine_fine):
        rng = np.random.default_rng(7)
        worst = 0.0
        for _ in range(100):
            h = _rhs(pair, rng)
            worst = max(worst, w2_norm(pair, _solve(pair, h).v) / pair.norm(h))
        ratios.append(worst)
    assert np.isfinite(ratios[0])
    assert abs(ratios[1] / ratios[0] - 1) < 0.05


def test_solvability_violation_reports_residuals(sine):
    h = np.ones(sine.grid.n)
    with pytest.raises(SolvabilityError) as info:
        solve_bvp(sine, BvpData(GridFunction(sine.grid, h), 0.0, 0.0))
    assert max(info.value.residuals) > 1e-3


def test_lattice_solve_is_exact(lattice, rng):
    h = _rhs(lattice, rng)
    sol = _solve(lattice, h)
    assert sol.residual < 1e-10
    assert abs(sol.g1 - sol.g2) < 1e-12


def test_bvp_csv(sine, tmp_path):
    sol = _solve(sine, sine.phi[0].values)
    export_bvp_csv(sol, tmp_path / "v.csv")
    lines = (tmp_path / "v.csv").read_text().splitlines()
    assert lines[0] == "t,v" and len(lines) == sine.grid.n + 1
