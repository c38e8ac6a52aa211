import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.errors import DomainError, PreconditionError
from app.profile1d import (
    GammaFamilyParams,
    Profile1D,
    eval_phi,
    eval_profile,
    eval_R,
    minimize_R,
    oracle_Gamma,
    resistance_1d,
    scan_gamma_family,
    solve_1d,
)
from app.verify import Interval, check_qconcave, lower_bound

admissible = st.tuples(
    st.floats(min_value=0.05, max_value=3.0), st.floats(min_value=0.0, max_value=1.0)
).filter(lambda mq: 2 * mq[0] >= mq[1])


def test_eval_R_examples():
    assert eval_R(1.0, 0.5, 1.0) == pytest.approx(math.pi / 2, abs=1e-14)
    assert eval_R(0.0, 0.5, 1.0) == pytest.approx(1.6, abs=1e-14)
    assert eval_R(0.0, 1.0, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_eval_R_small_q_branches_agree():
    assert eval_R(0.4, 0.7, 1e-7) == pytest.approx(eval_R(0.4, 0.7, 0.0), abs=1e-12)


def test_eval_R_rejects_gamma_outside():
    with pytest.raises(DomainError):
        eval_R(1.5, 0.5, 1.0)


def test_eval_phi_endpoints():
    M, q = 0.6, 0.8
    assert eval_phi(0.0, M, q) == pytest.approx(M**2 * (M**2 - 1.0))
    assert eval_phi(1.0, M, q) == pytest.approx(M**4)
    assert eval_phi(0.3, M, 0.0) == pytest.approx(M**4 - M**2 * 0.7**2)


@settings(max_examples=40)
@given(admissible)
def test_eval_phi_strictly_increasing(mq):
    M, q = mq
    values = np.array([eval_phi(g, M, q) for g in np.linspace(0.0, 1.0, 201)])
    assert np.all(np.diff(values) > 0)


def test_solve_1d_tent_for_high_profiles():
    profile = solve_1d(2.0, 0.5)
    assert profile.gamma_star == 0.0
    assert profile.resistance == pytest.approx(0.4, abs=1e-12)
    assert profile(0.5) == pytest.approx(1.0)


def test_solve_1d_half_one(profile_half_one):
    p = profile_half_one
    assert 0.0 < p.gamma_star < 1.0
    assert abs(eval_phi(p.gamma_star, 0.5, 1.0)) < 1e-10
    assert eval_phi(0.5 * p.gamma_star, 0.5, 1.0) < 0 < eval_phi(0.5 * (1 + p.gamma_star), 0.5, 1.0)


def test_solve_1d_classical_root():
    assert solve_1d(0.5, 0.0).gamma_star == pytest.approx(0.5, abs=1e-12)


@pytest.mark.parametrize("M, q, message", [(0.1, 1.0, "2M ≥ q"), (0.5, 1.5, "q ≤ 1"), (0.0, 0.0, "M > 0")])
def test_solve_1d_preconditions(M, q, message):
    with pytest.raises(PreconditionError, match=message):
        solve_1d(M, q)


def test_minimize_route_matches_root_route(profile_half_one):
    assert minimize_R(0.5, 1.0) == pytest.approx(profile_half_one.gamma_star, abs=1e-6)


def test_profile_values(profile_half_one):
    p = profile_half_one
    g = p.gamma_star
    assert p(0.0) == pytest.approx(0.5 - 0.5 * g * g)
    assert p(1.0) == pytest.approx(0.0, abs=1e-15)
    assert p(-1.0) == pytest.approx(0.0, abs=1e-15)
    assert p(g) == pytest.approx(0.5)
    x = np.linspace(-1.0, 1.0, 1001)
    u = eval_profile(p, x)
    assert np.allclose(u, u[::-1])
    assert u.min() >= 0.0 and u.max() <= 0.5 + 1e-15


def test_eval_profile_outside():
    with pytest.raises(DomainError):
        eval_profile(Profile1D(0.5, 1.0, 0.3), 1.5)


def test_profile_is_qconcave(profile_half_one):
    x = np.linspace(-1.0, 1.0, 1000)
    assert check_qconcave(x, profile_half_one(x), 1.0)


def test_derivative_matches_differences(profile_half_one):
    p = profile_half_one
    x = np.array([-0.9, -0.2, 0.1, 0.7])
    h = 1e-6
    fd = (p(x + h) - p(x - h)) / (2 * h)
    assert np.allclose(p.derivative(x), fd, atol=1e-6)


def test_resistance_1d_examples():
    x = np.linspace(-1.0, 1.0, 11)
    assert resistance_1d(x, np.zeros_like(x)) == pytest.approx(2.0)
    assert resistance_1d(x, 1.0 - np.abs(x)) == pytest.approx(1.0)


def test_resistance_1d_matches_closed_form(profile_half_one):
    p = profile_half_one
    x = p.grid(10_000)
    assert resistance_1d(x, p(x)) == pytest.approx(p.resistance, abs=1e-6)
    assert resistance_1d(x, p(x), derivative=p.derivative) == pytest.approx(p.resistance, abs=1e-10)


def test_resistance_1d_malformed():
    with pytest.raises(DomainError):
        resistance_1d(np.array([0.0]), np.array([1.0]))
    with pytest.raises(DomainError):
        resistance_1d(np.array([0.0, 0.0, 1.0]), np.zeros(3))


@settings(max_examples=30)
@given(admissible)
def test_resistance_above_lower_bound(mq):
    M, q = mq
    assert solve_1d(M, q).resistance >= lower_bound(Interval(), M) - 1e-9


def test_oracle_Gamma_examples():
    M, q, g = 0.5, 1.0, 0.6
    symmetric = GammaFamilyParams(a=-g, b=g, m=M, alpha=0.0, beta=0.0)
    assert oracle_Gamma(symmetric, M, q) == pytest.approx(eval_R(g, M, q), abs=1e-14)
    apex = GammaFamilyParams(a=0.0, b=0.0, m=1.5, alpha=0.0, beta=0.0)
    assert oracle_Gamma(apex, 1.5, q) == pytest.approx(2.0 / (1.0 + 1.5**2), abs=1e-14)
    flat = GammaFamilyParams(a=0.2, b=0.2, m=1.5, alpha=0.1, beta=0.3)
    expected = 1.2**3 / (1.2**2 + 1.4**2) + 0.8**3 / (0.8**2 + 1.2**2)
    assert oracle_Gamma(flat, 2.0, 0.0) == pytest.approx(expected, abs=1e-14)


def test_oracle_Gamma_rejects_outside_family():
    with pytest.raises(DomainError):
        oracle_Gamma(GammaFamilyParams(a=0.5, b=0.2, m=0.5, alpha=0.0, beta=0.0), 0.5, 1.0)


def test_gamma_family_scan_reduces_to_symmetric_member(profile_half_one):
    step = 0.04
    best, value = scan_gamma_family(0.5, 1.0, step=step)
    assert best.alpha == 0.0 and best.beta == 0.0
    assert best.m == pytest.approx(0.5)
    assert abs(best.a + best.b) <= step + 1e-12
    assert value >= profile_half_one.resistance - 1e-6
    assert value <= profile_half_one.resistance + 2e-3


@pytest.mark.slow
def test_gamma_family_scan_fine_grid(profile_half_one):
    best, value = scan_gamma_family(0.5, 1.0, step=0.02)
    assert best.alpha == 0.0 and best.beta == 0.0 and best.m == pytest.approx(0.5)
    assert abs(best.a + best.b) <= 0.02 + 1e-12
    assert abs(value - profile_half_one.resistance) <= 2e-3
