import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from app.errors import DegenerateTriangle, DomainError, OutsideDomain
from app.hull2d import (
    TWO_PI,
    ParamVector,
    build_hull,
    cost,
    flat_mesh,
    inscribed_radius,
    lift_points,
    phi_map,
    polygon_area,
    polygon_extent,
    radial_params,
    radial_seed,
    recover_u,
    rim_sag,
    sample_boundary,
    triangle_quadrature,
    triangle_rule,
)
from app.radial import RadialProblem, solve_radial
from app.verify import Disk, check_qconcave, sample_segments


def cone_cost(n, M):
    return 0.5 * n * math.sin(TWO_PI / n) / (1.0 + M * M / math.cos(math.pi / n) ** 2)


def apex_params():
    return ParamVector(np.array([[0.0, 0.0, 1.0]]))


def test_triangle_rule_shape_and_exactness():
    rule = triangle_rule(10)
    assert rule.count == 100
    assert rule.degree == 18
    assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)
    x, y = rule.points.T
    assert np.all(x >= 0) and np.all(y >= 0) and np.all(x + y <= 1)
    exact = math.factorial(9) ** 2 / math.factorial(20)
    assert np.dot(rule.weights, x**9 * y**9) == pytest.approx(exact, rel=1e-12)


@pytest.mark.parametrize("a, b", [(0, 0), (1, 0), (2, 3), (0, 5), (4, 4)])
def test_triangle_rule_monomials(a, b):
    rule = triangle_rule(5)
    x, y = rule.points.T
    exact = math.factorial(a) * math.factorial(b) / math.factorial(a + b + 2)
    assert np.dot(rule.weights, x**a * y**b) == pytest.approx(exact, rel=1e-12)


def test_triangle_rule_is_cached_and_read_only():
    rule = triangle_rule(6)
    assert triangle_rule(6) is rule
    with pytest.raises(ValueError):
        rule.weights[0] = 1.0


def test_sample_boundary():
    rim = sample_boundary(4)
    assert np.allclose(rim, [[1, 0], [0, 1], [-1, 0], [0, -1]], atol=1e-15)
    assert np.allclose(np.hypot(*sample_boundary(100).T), 1.0)
    with pytest.raises(DomainError):
        sample_boundary(2)


def test_polygon_geometry():
    assert polygon_area(4) == pytest.approx(2.0)
    assert polygon_area(100) == pytest.approx(50.0 * math.sin(TWO_PI / 100))
    assert inscribed_radius(6) == pytest.approx(math.sqrt(3) / 2)
    assert polygon_extent(0.0, 6) == pytest.approx(1.0)
    assert polygon_extent(math.pi / 6, 6) == pytest.approx(inscribed_radius(6))
    assert polygon_extent(TWO_PI / 6, 6) == pytest.approx(1.0)


def test_phi_map():
    assert np.allclose(phi_map((0.0, 1.0, 1.0), 2.0, 0.5), [0.0, 0.0, 2.25])
    assert np.allclose(phi_map((1.0, math.pi / 2, 0.0), 2.0, 0.5), [0.0, 1.0, 0.0], atol=1e-15)


def test_param_vector_box():
    p = ParamVector.from_flat([0.5, 1.0, 0.2, 1.0, 6.0, 1.0])
    assert p.m == 2
    assert p.to_flat().tolist() == [0.5, 1.0, 0.2, 1.0, 6.0, 1.0]
    assert ParamVector.bounds(2) == [(0.0, 1.0), (0.0, TWO_PI), (0.0, 1.0)] * 2
    with pytest.raises(DomainError):
        ParamVector.from_flat([1.5, 0.0, 0.0])
    with pytest.raises(DomainError):
        ParamVector.from_flat([0.5, 7.0, 0.0])


def test_lift_points_clamps_to_polygon():
    n = 10
    params = ParamVector(np.array([[1.0, math.pi / n, 0.0], [0.5, 0.0, 1.0]]))
    lifted = lift_points(params, 2.0, 0.0, n)
    assert np.hypot(*lifted[0, :2]) == pytest.approx(inscribed_radius(n))
    assert lifted[1].tolist() == pytest.approx([0.5, 0.0, 2.0])


def test_phi_map_rows_match_lift_points():
    rng = np.random.default_rng(3)
    points = np.column_stack((0.9 * rng.random(6), TWO_PI * rng.random(6), rng.random(6)))
    lifted = lift_points(ParamVector(points), 1.5, 0.4, 100)
    assert np.allclose(lifted, [phi_map(p, 1.5, 0.4) for p in points], atol=1e-15)


def test_flat_mesh_cost_is_polygon_area():
    mesh = flat_mesh(100)
    assert mesh.n == 100
    assert len(mesh.faces) == 98
    assert cost(mesh, 0.0) == pytest.approx(polygon_area(100), abs=1e-12)
    assert mesh.projected_areas.sum() == pytest.approx(polygon_area(100), abs=1e-12)


def test_no_lifted_points_gives_flat_mesh():
    mesh = build_hull(ParamVector(np.array([[0.3, 1.0, 0.0]])), 20, 1.0, 0.0)
    assert len(mesh.faces) == 18
    assert np.all(mesh.vertices[:, 2] == 0.0)


def test_flat_mesh_height_range():
    lo, hi = flat_mesh(100).height_range(0.5)
    assert lo == pytest.approx(-0.25, abs=1e-12)
    assert hi == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("n, M", [(100, 1.0), (20, 3.0), (7, 0.4)])
def test_cone_cost_matches_analytic_sum(n, M):
    mesh = build_hull(apex_params(), n, M, 0.0)
    assert len(mesh.faces) == n
    assert cost(mesh, 0.0) == pytest.approx(cone_cost(n, M), abs=1e-12)


def test_cone_surface_queries():
    n, M = 20, 2.0
    mesh = build_hull(apex_params(), n, M, 0.0)
    assert recover_u(mesh, [0.0, 0.0], 0.0) == pytest.approx(M)
    g = mesh.gradient(np.array([[0.3, 0.1], [-0.2, -0.4]]), 0.0)
    assert np.allclose(np.hypot(*g.T), M / inscribed_radius(n))
    assert mesh.height_range(0.0) == pytest.approx((0.0, M))
    with pytest.raises(OutsideDomain):
        recover_u(mesh, [2.0, 0.0], 0.0)
    assert mesh.locate(np.array([[2.0, 0.0]])).tolist() == [-1]


def test_cone_with_curvature_sags_at_the_rim():
    n, q = 30, 0.5
    mesh = build_hull(apex_params(), n, 1.0, q)
    lo, hi = mesh.height_range(q)
    assert hi == pytest.approx(1.0)
    assert lo == pytest.approx(-rim_sag(n, q), abs=1e-14)
    assert mesh.heights(q)[np.argmax(mesh.vertices[:, 2])] == pytest.approx(1.0)


def test_triangle_quadrature():
    tri = [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]
    assert triangle_quadrature(lambda p: np.ones(len(p)), tri) == pytest.approx(1.0)
    assert triangle_quadrature(lambda p: p[:, 0], tri) == pytest.approx(2.0 / 3.0)
    with pytest.raises(DegenerateTriangle):
        triangle_quadrature(lambda p: np.ones(len(p)), [[0, 0], [1, 1], [2, 2]])


@settings(max_examples=20, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**31 - 1),
    q=st.floats(min_value=0.0, max_value=1.0),
)
def test_hull_profiles_are_qconcave(seed, q):
    n = 24
    rng = np.random.default_rng(seed)
    m = 8
    params = ParamVector(np.column_stack((rng.random(m), TWO_PI * rng.random(m), rng.random(m))))
    mesh = build_hull(params, n, 1.0, q)
    segments = sample_segments(Disk(inscribed_radius(n)), 50, points=9, seed=seed)
    u = recover_u(mesh, segments.reshape(-1, 2), q).reshape(segments.shape[:2])
    assert check_qconcave(segments, u, q, tol=1e-9)


def test_mesh_cost_approaches_radial_resistance(radial_half_one):
    sol = radial_half_one
    params = radial_params(sol, rings=40, points_per_ring=100)
    mesh = build_hull(params, 100, sol.M, sol.q)
    assert abs(cost(mesh, sol.q) / TWO_PI - sol.resistance) < 5e-3


def test_radial_params_sample_the_profile(radial_half_one):
    sol = radial_half_one
    params = radial_params(sol, rings=3, points_per_ring=4, stagger=True)
    assert params.m == 12
    r, theta, z = params.points.T
    assert r[0] == pytest.approx(sol.a_star)
    assert z[0] == pytest.approx(1.0)
    assert theta[4] == pytest.approx(math.pi / 4)
    assert np.all(np.diff(z[::4]) < 0)


@pytest.mark.parametrize("m", [1, 7, 50])
def test_radial_seed_has_exactly_m_points(radial_half_one, m):
    params = radial_seed(radial_half_one, m)
    assert params.m == m
    assert np.all(params.points[:, 0] >= radial_half_one.a_star - 1e-12)


def test_radial_params_require_unit_disk():
    sol = solve_radial(RadialProblem(R=0.5, M=1.0, q=0.0), n_samples=16)
    with pytest.raises(DomainError):
        radial_params(sol, 2, 2)


def test_radial_seed_mesh_cost_approaches_radial_resistance(radial_half_one):
    sol = radial_half_one
    mesh = build_hull(radial_seed(sol, 50), 100, sol.M, sol.q)
    assert abs(cost(mesh, sol.q) / TWO_PI - sol.resistance) < 5e-3


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**31 - 1),
    m=st.integers(min_value=1, max_value=20),
    q=st.floats(min_value=0.0, max_value=1.0),
)
def test_hull_faces_tile_the_polygon(seed, m, q):
    n = 30
    rng = np.random.default_rng(seed)
    params = ParamVector(np.column_stack((rng.random(m), TWO_PI * rng.random(m), rng.random(m))))
    mesh = build_hull(params, n, 2.0, q)
    assert mesh.projected_areas.sum() == pytest.approx(polygon_area(n), abs=1e-9)
