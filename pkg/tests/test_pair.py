import numpy as np
import pytest

from deltaprime.calculus import Quadrature
from deltaprime.gridfn import make_grid_function, unit_interval
from deltaprime.pair import (PairError, build_pair, export_csv, kappa_crosscheck, lattice_from,
                             lattice_pair, pair_from_csv, pair_from_profiles, sine_profiles,
                             validate_pair)

KAPPA = 4 / np.pi


def omega_closed_form(x):
    return 2 / np.pi * (1 - np.cos(np.pi * (x + 1) / 2)) - (1 - np.cos(np.pi * (x + 1))) / np.pi


def test_sine_pair_constants(sine):
    assert sine.n == pytest.approx((1.0, 1.0), abs=1e-12)
    assert sine.m[0] == pytest.approx(-KAPPA, abs=1e-6)
    assert sine.m[1] == pytest.approx(0.0, abs=1e-6)
    assert sine.kappa == pytest.approx(1.273239, abs=1e-6)
    assert abs(sine.omega.values[2000]) < 1e-6


def test_omega_matches_closed_form(sine):
    err = np.max(np.abs(sine.omega.values - omega_closed_form(sine.grid.x)))
    assert err < 1e-6
    assert sine.norm(sine.omega.values) == pytest.approx(0.84217, abs=1e-5)


def test_dependent_profiles_rejected():
    e1, _ = sine_profiles(unit_interval(401))
    with pytest.raises(PairError, match="dependent"):
        build_pair(e1, e1)


def test_zero_kappa_rejected():
    g = unit_interval(4001)
    odd1 = make_grid_function(lambda x: np.sin(np.pi * x), g)
    odd2 = make_grid_function(lambda x: np.sin(2 * np.pi * x), g)
    with pytest.raises(PairError, match="kappa must be nonzero"):
        build_pair(odd1, odd2)


def test_kappa_crosscheck(sine):
    k_om, k_mom = kappa_crosscheck(sine)
    assert abs(k_om - k_mom) < 1e-8
    assert k_om == pytest.approx(KAPPA, abs=1e-8)
    n1, n2 = sine.n
    assert k_mom == pytest.approx(-n2 * sine.m[0], abs=1e-12)


def test_validation_passes_for_sine(sine):
    report = validate_pair(sine)
    assert report.passed, report.failures


def test_validation_flags_scaled_phi2(sine):
    bad = pair_from_profiles(sine.phi[0], 2 * sine.phi[1].values, sine.calculus)
    report = validate_pair(bad)
    assert report.failures == ["n1n2_minus_1"]


def test_validation_flags_shifted_phi1(sine):
    bad = pair_from_profiles(sine.phi[0].values + 0.1, sine.phi[1], sine.calculus)
    report = validate_pair(bad)
    assert not report["mean_phi1"].passed
    assert report["mean_phi2"].passed


def test_omega_slopes_vanish_at_ends(sine):
    sl, sr = sine.calculus.slope_at_ends(sine.omega.values)
    assert abs(sl) < 1e-6 and abs(sr) < 1e-6


def test_omega_second_derivative(sine):
    d2 = sine.calculus.d2(sine.omega.values)
    target = sine.n[1] * sine.phi[0].values - sine.n[0] * sine.phi[1].values
    assert np.max(np.abs(d2 - target)) < 50 * sine.grid.h**2


def test_omega_is_not_constant(sine):
    assert np.ptp(sine.omega.values) > 0.5


def test_sign_flip_keeps_kappa_magnitude(sine):
    e1, e2 = sine_profiles(unit_interval(4001))
    flipped = build_pair(e1.with_values(-e1.values), e2.with_values(-e2.values))
    assert abs(flipped.kappa) == pytest.approx(abs(sine.kappa), abs=1e-12)


def test_lattice_pair_holds_hypotheses_exactly(lattice):
    report = validate_pair(lattice)
    assert report.passed, report.failures
    assert abs(report["mean_phi2"].measured) < 1e-14
    assert lattice.kappa == pytest.approx(KAPPA, rel=1e-4)
    k_om, k_mom = kappa_crosscheck(lattice)
    assert abs(k_om - k_mom) < 1e-13


def test_lattice_from_quadrature_pair(sine, lattice):
    other = lattice_from(sine, 129)
    assert validate_pair(other).passed
    assert other.kappa == pytest.approx(lattice.kappa, abs=1e-8)


def test_lattice_pair_accepts_callables_and_rejects_dependence():
    f = lambda s: np.where(np.abs(s) < 1, np.sin(np.pi * (s + 1) / 2), 0.0)
    with pytest.raises(PairError):
        lattice_pair(f, f, 129)


def test_csv_round_trip_of_phi_profiles(sine, tmp_path):
    path = tmp_path / "pair.csv"
    export_csv(sine, path)
    back = pair_from_csv(path)
    assert np.array_equal(back.phi[0].values, sine.phi[0].values)
    assert back.kappa == pytest.approx(sine.kappa, abs=1e-14)


def test_csv_with_eta_columns_builds_pair(tmp_path):
    g = unit_interval(1001)
    e1, e2 = sine_profiles(g)
    path = tmp_path / "eta.csv"
    lines = ["x,eta1,eta2"] + [f"{float(x)!r},{float(a)!r},{float(b)!r}" for x, a, b in zip(g.x, e1.values, e2.values)]
    path.write_text("\n".join(lines) + "\n")
    p = pair_from_csv(path)
    assert validate_pair(p).passed
    assert p.kappa == pytest.approx(KAPPA, abs=1e-6)


def test_csv_without_profile_columns_rejected(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("x,a\n-1,0\n0,0\n1,0\n")
    with pytest.raises(PairError):
        pair_from_csv(path)


def test_profiles_only_pair_keeps_calculus(sine):
    p = pair_from_profiles(sine.phi[0], sine.phi[1], Quadrature(sine.grid))
    assert p.kappa == pytest.approx(sine.kappa, abs=1e-14)
