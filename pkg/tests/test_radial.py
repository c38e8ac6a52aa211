import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.errors import DomainError, PreconditionError
from app.numerics import integrate
from app.radial import (
    RadialProblem,
    compute_a_star,
    compute_aM,
    energy_derivative,
    energy_E,
    eta_of_a,
    eta_prime,
    gamma_q,
    h_fun,
    h_inv,
    psi,
    resistance_radial,
    solve_radial,
    zeta_q,
)
from app.verify import Disk, check_qconcave_radial, lower_bound


def test_h_fun_examples():
    assert h_fun(-1.0) == pytest.approx(0.25, abs=1e-15)
    assert h_fun(-2.0) == pytest.approx(0.08, abs=1e-15)
    assert h_fun(-10.0) == pytest.approx(10.0 / 101.0**2, rel=1e-14)
    with pytest.raises(DomainError):
        h_fun(-0.5)


def test_h_inv_examples():
    assert h_inv(0.25) == pytest.approx(-1.0, abs=1e-12)
    assert h_inv(h_fun(-2.0)) == pytest.approx(-2.0, abs=1e-12)
    assert abs(h_inv(1e-6) * 1e-2 + 1.0) < 0.02
    for bad in (0.0, -0.1, 0.3):
        with pytest.raises(DomainError):
            h_inv(bad)


@settings(max_examples=60)
@given(st.floats(min_value=1e-9, max_value=0.25))
def test_h_inv_residual(s):
    t = h_inv(s)
    assert t <= -1.0
    assert abs(h_fun(t) - s) <= 1e-13 * s


def test_h_inv_vectorized_matches_scalar():
    s = np.array([1e-8, 1e-4, 0.01, 0.1, 0.2, 0.25])
    assert np.allclose(h_inv(s), [h_inv(float(v)) for v in s], rtol=1e-14, atol=0.0)


def test_compute_aM_residual_and_monotonicity():
    a_1 = compute_aM(1.0, 1.0)
    assert 0.0 < a_1 < 1.0
    assert abs(psi(a_1, a_1 / 4.0, 1.0) - 1.0) < 1e-9
    assert compute_aM(1.0, 0.5) > a_1


def test_compute_aM_tiny_height():
    assert compute_aM(1.0, 1e-6) == pytest.approx(1.0, abs=1e-3)


def test_eta_of_a_properties():
    R, M = 1.0, 0.5
    a_M = compute_aM(R, M)
    assert eta_of_a(a_M, R, M, a_M) == pytest.approx(a_M / 4.0, rel=1e-8)
    grid = np.linspace(a_M, R, 12)[1:-1]
    etas = [eta_of_a(a, R, M, a_M) for a in grid]
    assert all(e1 > e2 for e1, e2 in zip(etas, etas[1:]))
    for a, eta in zip(grid, etas):
        assert abs(psi(a, eta, R) - M) < 1e-9
    with pytest.raises(DomainError):
        eta_of_a(0.5 * a_M, R, M, a_M)


def test_eta_prime_matches_differences():
    R, M = 1.0, 0.5
    a_M = compute_aM(R, M)
    a = 0.5 * (a_M + R)
    step = 1e-5
    fd = (eta_of_a(a + step, R, M, a_M) - eta_of_a(a - step, R, M, a_M)) / (2.0 * step)
    assert eta_prime(a, R, M, a_M) == pytest.approx(fd, rel=1e-4)


def test_gamma_q_examples():
    assert gamma_q(0.3, 0.0) == 1.0
    assert gamma_q(1.0, 1.0) == pytest.approx(math.sqrt((4.0 + math.sqrt(20.0)) / 2.0), rel=1e-14)
    aq2 = 0.0625
    expected = math.sqrt(0.5 * (3 * aq2 + 1 + math.sqrt(9 * aq2**2 + 10 * aq2 + 1)))
    assert gamma_q(0.5, 0.5) == pytest.approx(expected, rel=1e-14)


def test_zeta_q_limits():
    R = 1.0
    a_M = compute_aM(R, 0.5)
    assert zeta_q(0.4, R, 0.0) == pytest.approx(psi(0.4, 0.1, R), abs=1e-14)
    assert zeta_q(a_M, R, 1.0) > 0.5
    assert zeta_q(1.0 - 1e-6, R, 1.0) < 1e-3
    near, far = a_M + 0.3 * (R - a_M), a_M + 0.6 * (R - a_M)
    assert zeta_q(near, R, 1.0) > zeta_q(far, R, 1.0)


def test_problem_preconditions():
    with pytest.raises(PreconditionError, match="qR ≤ 1"):
        RadialProblem(R=1.0, M=1.0, q=1.5)
    with pytest.raises(PreconditionError, match="2M ≥ qR²"):
        RadialProblem(R=1.0, M=0.1, q=1.0)
    with pytest.raises(PreconditionError):
        RadialProblem(R=0.0, M=1.0, q=0.0)


@pytest.mark.parametrize("fixture", ["radial_half_one", "radial_one_one"])
def test_radial_chain(fixture, request):
    sol = request.getfixturevalue(fixture)
    prob = sol.problem
    assert sol.a_M <= sol.a_star < sol.R
    assert abs(zeta_q(sol.a_star, sol.R, sol.q) - sol.M) < 1e-8
    eta = eta_of_a(sol.a_star, sol.R, sol.M, sol.a_M)
    assert abs(eta - sol.a_star * h_fun(-gamma_q(sol.a_star, sol.q))) < 1e-8
    assert sol.height(sol.a_star) == pytest.approx(sol.M, abs=1e-8)
    assert sol.height(sol.R) == pytest.approx(0.0, abs=1e-8)
    assert sol.u[-1] == 0.0

    tail = sol.r > sol.a_star
    du = sol.derivative(sol.r[tail])
    residual = -sol.r[tail] * du / (1.0 + du**2) ** 2 - sol.eta_star
    assert np.max(np.abs(residual)) < 1e-8

    kink = sol.derivative(sol.a_star * (1.0 + 1e-12))
    assert kink == pytest.approx(-gamma_q(sol.a_star, sol.q), abs=1e-6)

    step = min(1e-4, 0.5 * (sol.a_star - sol.a_M))
    fd = (energy_E(sol.a_star + step, prob, sol.a_M) - energy_E(sol.a_star - step, prob, sol.a_M)) / (2 * step)
    assert abs(fd) < 1e-5
    assert abs(energy_derivative(sol.a_star, prob, sol.a_M)) < 1e-6


def test_radial_samples_match_exact_heights(radial_half_one):
    sol = radial_half_one
    assert np.allclose(sol.height(sol.r), sol.u, atol=1e-9)
    # convex cap rising to M at a*, then a decreasing tail
    assert np.argmax(sol.u) == np.searchsorted(sol.r, sol.a_star)
    assert np.all(np.diff(sol.u[sol.r >= sol.a_star]) < 0)
    assert sol.u.min() == 0.0
    assert check_qconcave_radial(sol.r, sol.u, sol.q)


def test_height_outside_disk(radial_half_one):
    with pytest.raises(DomainError):
        radial_half_one.height(1.5)


def test_classical_limit(radial_classical):
    sol = radial_classical
    assert sol.a_star == pytest.approx(compute_a_star(sol.problem), abs=1e-8)
    assert sol.a_star == pytest.approx(sol.a_M, abs=1e-8)
    assert sol.derivative(sol.a_star * (1.0 + 1e-12)) == pytest.approx(-1.0, abs=1e-8)


def test_energy_grid_optimality(radial_half_one):
    sol = radial_half_one
    prob = sol.problem
    best = sol.resistance
    for a in np.linspace(sol.a_M, sol.R, 51)[:-1]:
        assert energy_E(a, prob, sol.a_M) >= best - 1e-9


def test_energy_cap_term_without_curvature(radial_classical):
    sol = radial_classical
    a = 0.5 * (sol.a_M + sol.R)
    eta = eta_of_a(a, sol.R, sol.M, sol.a_M)
    tail = integrate(lambda r: r / (1.0 + h_inv(eta / r) ** 2), a, sol.R)
    assert energy_E(a, sol.problem, sol.a_M, eta) - tail == pytest.approx(0.5 * a * a, abs=1e-14)


def test_energy_below_feasible_radius(radial_half_one):
    with pytest.raises(DomainError):
        energy_E(0.5 * radial_half_one.a_M, radial_half_one.problem, radial_half_one.a_M)


def test_resistance_radial_examples():
    r = np.linspace(0.0, 1.0, 21)
    assert resistance_radial(r, np.full_like(r, 3.0)) == pytest.approx(0.5, abs=1e-15)
    M = 0.7
    assert resistance_radial(r, M * (1.0 - r)) == pytest.approx(1.0 / (2.0 * (1.0 + M * M)), abs=1e-14)
    with pytest.raises(DomainError):
        resistance_radial(np.array([0.5, 0.2]), np.zeros(2))


@pytest.mark.parametrize("fixture", ["radial_half_one", "radial_one_one", "radial_classical"])
def test_sampled_resistance_matches_energy(fixture, request):
    sol = request.getfixturevalue(fixture)
    assert resistance_radial(sol.r, sol.u, sol.derivative) == pytest.approx(sol.resistance, abs=1e-6)
    assert 2.0 * math.pi * sol.resistance >= lower_bound(Disk(sol.R), sol.M) - 1e-9


def test_resistance_decreases_with_curvature():
    values = [solve_radial(RadialProblem(R=1.0, M=0.75, q=q), n_samples=64).resistance for q in (0.0, 0.25, 0.5, 1.0)]
    assert all(v1 >= v2 for v1, v2 in zip(values, values[1:]))
    assert values[0] - values[-1] >= 1e-4


def test_record_fields(radial_half_one):
    record = radial_half_one.to_record()
    assert set(record) == {"R", "M", "q", "a_M", "a_star", "eta_star", "resistance"}
    assert len(radial_half_one.samples) == radial_half_one.r.size


@pytest.mark.parametrize("M", [0.5, 0.75, 1.0])
@pytest.mark.parametrize("q", [1e-11, 1e-9, 1e-7, 1e-5])
def test_small_curvature_approaches_classical(M, q):
    classical = solve_radial(RadialProblem(R=1.0, M=M, q=0.0), n_samples=64)
    sol = solve_radial(RadialProblem(R=1.0, M=M, q=q), n_samples=64)
    assert sol.a_star >= sol.a_M
    assert sol.a_star == pytest.approx(classical.a_star, abs=1e-4)
    assert sol.resistance == pytest.approx(classical.resistance, abs=1e-4)
    assert sol.u[-1] == 0.0
    assert sol.height(0.0) == pytest.approx(M, abs=1e-6)
