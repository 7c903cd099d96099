import numpy as np
import pytest

from deltaprime.design import (DesignError, PointInteraction, alphabeta_of, design_for,
                               interaction_of, moments_for_target, synthesize_q)
from deltaprime.gridfn import GridFunction

KAPPA = 4 / np.pi
GRID_AB = [(a, b) for a in (-0.5, 0.5, 1.0, 2.0, 5.0) for b in (-0.5, 1.0, 3.0)]


def test_moments_for_alpha_two():
    assert moments_for_target(2, 1, KAPPA) == pytest.approx((0.5, -2 / np.pi, 8 / np.pi**2), abs=1e-15)


def test_moments_for_classic_case():
    assert moments_for_target(1, 1, KAPPA) == (0.0, 0.0, pytest.approx(16 / np.pi**2))


@pytest.mark.parametrize("alpha", [1.0, 3.0])
def test_zero_beta_rejected(alpha):
    with pytest.raises(DesignError, match="unreachable regime"):
        moments_for_target(alpha, 0.0, KAPPA)


def test_excluded_family_message_mentions_diagonal_matrix():
    with pytest.raises(DesignError, match=r"diag\(3, 0.333333\)"):
        moments_for_target(3.0, 0.0, KAPPA)


def test_zero_alpha_rejected():
    with pytest.raises(DesignError):
        moments_for_target(0.0, 1.0, KAPPA)
    with pytest.raises(DesignError):
        PointInteraction(0.0, 1.0)


def test_alphabeta_examples():
    ab = alphabeta_of(0.5, -2 / np.pi, 8 / np.pi**2, KAPPA)
    assert (ab.alpha, ab.beta) == (pytest.approx(2.0, abs=1e-12), pytest.approx(1.0, abs=1e-12))
    ab = alphabeta_of(0.0, 0.0, 16 / np.pi**2, KAPPA)
    assert (ab.alpha, ab.beta) == (1.0, pytest.approx(1.0, abs=1e-12))


def test_alphabeta_degenerate_inputs():
    with pytest.raises(DesignError, match="degenerate"):
        alphabeta_of(1, 1, 1, 1)
    with pytest.raises(DesignError):
        alphabeta_of(0, 0, 0, 1)
    with pytest.raises(DesignError, match=r"hypothesis \(ii\)"):
        alphabeta_of(1.0, 0.5, 1.0, 1)


@pytest.mark.parametrize("alpha,beta", GRID_AB)
def test_formula_round_trip(alpha, beta):
    a = moments_for_target(alpha, beta, KAPPA)
    ab = alphabeta_of(*a, KAPPA)
    assert ab.alpha == pytest.approx(alpha, abs=1e-10)
    assert ab.beta == pytest.approx(beta, abs=1e-10)
    assert abs(a[0] * a[2] - a[1] ** 2) <= 1e-12 * max(a[1] ** 2, abs(a[0] * a[2]), 1e-300) or alpha == 1
    assert a[2] - KAPPA * a[1] == pytest.approx(KAPPA**2 / beta, abs=1e-10)


def test_zero_target_gives_zero_potential(sine):
    q = synthesize_q(sine, (0.0, 0.0, 0.0))
    assert np.all(q.values == 0)


def test_alpha_two_design_on_sine_pair(sine):
    q = design_for(sine, 2.0, 1.0)
    target = np.array(moments_for_target(2.0, 1.0, sine.kappa))
    assert target == pytest.approx([0.5, -2 / np.pi, 8 / np.pi**2], abs=1e-10)
    assert np.max(np.abs(np.array(q.moments) - target)) <= 1e-12 * np.linalg.norm(target)
    ab = interaction_of(sine, q)
    assert ab.alpha == pytest.approx(2.0, abs=1e-10) and ab.beta == pytest.approx(1.0, abs=1e-10)
    assert q.gram_residual <= 1e-12 * np.linalg.norm(target)


def test_classic_design_kills_low_moments(sine):
    q = synthesize_q(sine, (0.0, 0.0, 16 / np.pi**2))
    assert abs(q.moments[0]) < 1e-12 and abs(q.moments[1]) < 1e-12
    assert q.values[0] == 0.0 and q.values[-1] == 0.0


def test_moments_match_discrete_pairing(sine):
    q = design_for(sine, 5.0, -0.5)
    om = sine.omega.values
    for k in range(3):
        assert q.moments[k] == pytest.approx(np.sum(sine.grid.simpson_weights * q.values * om**k), abs=1e-12)


def test_window_where_omega_is_flat_is_rejected(sine):
    x = sine.grid.x
    narrow = np.clip(1 - ((x + 0.999) / 0.001) ** 2, 0, None)
    with pytest.raises(DesignError, match="too close to constant"):
        synthesize_q(sine, (0.5, -0.6, 0.8), GridFunction(sine.grid, narrow))


@pytest.mark.parametrize("alpha,beta", GRID_AB)
def test_design_on_lattice_pair(lattice, alpha, beta):
    ab = interaction_of(lattice, design_for(lattice, alpha, beta))
    assert ab.alpha == pytest.approx(alpha, abs=1e-10)
    assert ab.beta == pytest.approx(beta, abs=1e-10)
