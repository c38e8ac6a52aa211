"""
Convex-Hull Surface Module

Discretization of the 2D problem on the unit disk: the boundary is sampled by a
regular n-gon, m parameter points are lifted by the cylindrical map, and the upper
convex hull of the union is projected to a triangulation on which the q-concave
profile u = v + q(|x|^2 - 1)/2 is quadratic face by face. The resistance is then
accumulated with a collapsed tensor Gauss rule on every projected triangle.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional
import logging
import math

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from app.config import HULL_DEDUP_TOL, MIN_FACE_AREA, QUADRATURE_ORDER, UPPER_FACE_TOL
from app.errors import DegenerateHull, DegenerateTriangle, DomainError, OutsideDomain
from app.numerics import gauss_legendre

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
_LOCATE_TOL = 1e-12


@dataclass(frozen=True)
class TriangleRule:
    """Rule on the reference triangle (0,0), (1,0), (0,1); weights sum to 1/2."""

    points: np.ndarray
    weights: np.ndarray
    degree: int

    @property
    def count(self) -> int:
        return int(self.weights.size)


@lru_cache(maxsize=None)
def triangle_rule(d: int = QUADRATURE_ORDER) -> TriangleRule:
    """Duffy-collapsed d x d Gauss-Legendre rule: d² points, exact to total degree 2d - 2."""
    rule = gauss_legendre(d)
    xi = 0.5 * (rule.nodes + 1.0)
    w = 0.5 * rule.weights
    X, E = np.meshgrid(xi, xi, indexing="ij")
    WX, WE = np.meshgrid(w, w, indexing="ij")
    points = np.column_stack((X.ravel(), (E * (1.0 - X)).ravel()))
    weights = (WX * WE * (1.0 - X)).ravel()
    points.setflags(write=False)
    weights.setflags(write=False)
    return TriangleRule(points=points, weights=weights, degree=2 * d - 2)


def sample_boundary(n: int) -> np.ndarray:
    """Vertices C_k = (cos 2πk/n, sin 2πk/n) of the inscribed regular n-gon."""
    if n < 3:
        raise DomainError(f"boundary sampling needs n ≥ 3, got {n}")
    angles = TWO_PI * np.arange(n) / n
    return np.column_stack((np.cos(angles), np.sin(angles)))


def polygon_area(n: int) -> float:
    return 0.5 * n * math.sin(TWO_PI / n)


def inscribed_radius(n: int) -> float:
    return math.cos(math.pi / n)


def polygon_extent(theta, n: int):
    """Distance from the origin to the n-gon boundary in direction theta."""
    sector = np.mod(theta, TWO_PI / n)
    return math.cos(math.pi / n) / np.cos(sector - math.pi / n)


def phi_map(p, M: float, q: float) -> np.ndarray:
    """Cylindrical lift (r, θ, z) -> (r cos θ, r sin θ, zM - q(r² - 1)/2)."""
    r, theta, z = np.moveaxis(np.asarray(p, dtype=float), -1, 0)
    return np.stack((r * np.cos(theta), r * np.sin(theta), z * M - 0.5 * q * (r * r - 1.0)), axis=-1)


@dataclass(frozen=True)
class ParamVector:
    """m lifted points (r_i, θ_i, z_i) in [0,1] x [0,2π] x [0,1]."""

    points: np.ndarray

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=float).reshape(-1, 3)
        r, theta, z = pts.T
        tol = 1e-12
        if (
            np.any(r < -tol) or np.any(r > 1 + tol)
            or np.any(theta < -tol) or np.any(theta > TWO_PI + tol)
            or np.any(z < -tol) or np.any(z > 1 + tol)
        ):
            raise DomainError("parameter points must lie in [0,1] x [0,2π] x [0,1]")
        object.__setattr__(self, "points", pts)

    @property
    def m(self) -> int:
        return int(self.points.shape[0])

    @classmethod
    def from_flat(cls, vector) -> "ParamVector":
        return cls(np.asarray(vector, dtype=float).reshape(-1, 3))

    def to_flat(self) -> np.ndarray:
        return self.points.ravel().copy()

    @staticmethod
    def bounds(m: int) -> list[tuple[float, float]]:
        return [(0.0, 1.0), (0.0, TWO_PI), (0.0, 1.0)] * m


def lift_points(params: ParamVector, M: float, q: float, n: int) -> np.ndarray:
    """Lifted points (x, y, v); radii beyond the n-gon are clamped onto its boundary."""
    if params.m == 0:
        return np.empty((0, 3))
    r, theta, z = params.points.T
    r = np.minimum(np.clip(r, 0.0, 1.0), polygon_extent(theta, n))
    return phi_map(np.column_stack((r, theta, z)), M, q)


@dataclass(frozen=True)
class SurfaceMesh:
    """
    Upper convex hull projected onto the n-gon.

    vertices hold (x, y, v) with v the concave part of the profile; face_gradients
    and face_offsets describe v = g·x + c on every face.
    """

    vertices: np.ndarray
    faces: np.ndarray
    face_gradients: np.ndarray
    face_offsets: np.ndarray
    boundary: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return int(self.boundary.shape[0])

    @property
    def triangles(self) -> np.ndarray:
        return self.vertices[self.faces][:, :, :2]

    @property
    def projected_areas(self) -> np.ndarray:
        tri = self.triangles
        e1 = tri[:, 1] - tri[:, 0]
        e2 = tri[:, 2] - tri[:, 0]
        return 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def heights(self, q: float) -> np.ndarray:
        """Physical heights u at the vertices."""
        xy = self.vertices[:, :2]
        return self.vertices[:, 2] + 0.5 * q * (np.sum(xy * xy, axis=1) - 1.0)

    def locate(self, x: np.ndarray) -> np.ndarray:
        """Index of a face containing each point, -1 where none does."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        tri = self.triangles
        a, b, c = tri[:, 0], tri[:, 1], tri[:, 2]
        v0, v1 = b - a, c - a
        det = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
        d = pts[:, None, :] - a[None, :, :]
        l1 = (d[..., 0] * v1[None, :, 1] - d[..., 1] * v1[None, :, 0]) / det[None, :]
        l2 = (v0[None, :, 0] * d[..., 1] - v0[None, :, 1] * d[..., 0]) / det[None, :]
        inside = (l1 >= -_LOCATE_TOL) & (l2 >= -_LOCATE_TOL) & (l1 + l2 <= 1.0 + _LOCATE_TOL)
        found = inside.any(axis=1)
        return np.where(found, inside.argmax(axis=1), -1)

    def gradient(self, x: np.ndarray, q: float) -> np.ndarray:
        """∇u = ∇v|_τ + q·x at points x (shape (P, 2))."""
        pts = np.atleast_2d(np.asarray(x, dtype=float))
        idx = self.locate(pts)
        if np.any(idx < 0):
            raise OutsideDomain("gradient requested outside the discretized cross section")
        return self.face_gradients[idx] + q * pts

    def height_range(self, q: float) -> tuple[float, float]:
        """Exact minimum and maximum of u over the mesh (u is a convex quadratic per face)."""
        u_vert = self.heights(q)
        u_faces = u_vert[self.faces]
        hi = float(u_vert.max())
        lo = float(u_faces.min())
        if q <= 0:
            return lo, hi
        tri = self.triangles
        for i, j in ((0, 1), (1, 2), (2, 0)):
            length2 = np.sum((tri[:, j] - tri[:, i]) ** 2, axis=1)
            du = u_faces[:, j] - u_faces[:, i]
            safe = np.where(length2 > 0, length2, 1.0)
            t = np.clip(0.5 - du / (q * safe), 0.0, 1.0)
            edge = u_faces[:, i] + t * du - 0.5 * q * t * (1.0 - t) * length2
            lo = min(lo, float(edge.min()))
        stationary = -self.face_gradients / q
        owner = self.locate(stationary)
        own = np.nonzero(owner == np.arange(len(self.faces)))[0]
        if own.size:
            xs = stationary[own]
            values = (
                np.sum(self.face_gradients[own] * xs, axis=1)
                + self.face_offsets[own]
                + 0.5 * q * (np.sum(xs * xs, axis=1) - 1.0)
            )
            lo = min(lo, float(values.min()))
        return lo, hi


def rim_sag(n: int, q: float) -> float:
    """Depth (q/2) sin²(π/n) of u below zero at the middle of a boundary edge."""
    return 0.5 * q * math.sin(math.pi / n) ** 2


def _face_planes(vertices: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    p0, p1, p2 = (vertices[faces[:, k]] for k in range(3))
    normal = np.cross(p1 - p0, p2 - p0)
    grad = np.column_stack((-normal[:, 0] / normal[:, 2], -normal[:, 1] / normal[:, 2]))
    offset = p0[:, 2] - np.sum(grad * p0[:, :2], axis=1)
    return grad, offset


def flat_mesh(n: int) -> SurfaceMesh:
    """Fan triangulation of the n-gon at v = 0."""
    rim = sample_boundary(n)
    vertices = np.column_stack((rim, np.zeros(n)))
    faces = np.array([[0, k, k + 1] for k in range(1, n - 1)], dtype=int)
    return SurfaceMesh(
        vertices=vertices,
        faces=faces,
        face_gradients=np.zeros((len(faces), 2)),
        face_offsets=np.zeros(len(faces)),
        boundary=rim,
    )


def _upper_hull(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    try:
        hull = ConvexHull(points)
    except QhullError as e:
        raise DegenerateHull(str(e).splitlines()[0] if str(e) else "qhull failed") from e
    upper = hull.equations[:, 2] > UPPER_FACE_TOL
    if not upper.any():
        raise DegenerateHull("hull has no upward-facing face")
    return hull.simplices[upper], hull.equations[upper]


def build_hull(params: ParamVector, n: int, M: float, q: float) -> SurfaceMesh:
    """
    Upper convex hull of the rim samples and the lifted parameter points.

    Falls back to the flat triangulation of the n-gon when the point set has no
    volume (e.g. no lifted point above the rim plane).
    """
    rim = sample_boundary(n)
    lifted = lift_points(params, M, q, n)
    if lifted.shape[0] == 0 or lifted[:, 2].max() <= HULL_DEDUP_TOL:
        return flat_mesh(n)
    points = np.vstack((np.column_stack((rim, np.zeros(n))), lifted))
    keys = np.round(points / HULL_DEDUP_TOL).astype(np.int64)
    _, first = np.unique(keys, axis=0, return_index=True)
    points = points[np.sort(first)]
    try:
        simplices, _ = _upper_hull(points)
    except DegenerateHull as e:
        logger.warning("⚠️ Degenerate hull (%s); using the flat mesh", e)
        return flat_mesh(n)
    tri = points[simplices][:, :, :2]
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    signed = 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
    keep = np.abs(signed) > MIN_FACE_AREA
    simplices = simplices[keep]
    # counter-clockwise in projection
    flip = signed[keep] < 0
    simplices[flip] = simplices[flip][:, [0, 2, 1]]
    used, faces = np.unique(simplices, return_inverse=True)
    faces = faces.reshape(-1, 3)
    vertices = points[used]
    grad, offset = _face_planes(vertices, faces)
    return SurfaceMesh(vertices=vertices, faces=faces, face_gradients=grad, face_offsets=offset, boundary=rim)


def recover_u(mesh: SurfaceMesh, x, q: float):
    """
    Profile height u(x) = v(x) + q(|x|² - 1)/2 at points of the n-gon.

    Raises:
        OutsideDomain: if a point is not covered by the projected faces
    """
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    idx = mesh.locate(pts)
    if np.any(idx < 0):
        raise OutsideDomain("point outside the discretized cross section")
    v = np.sum(mesh.face_gradients[idx] * pts, axis=1) + mesh.face_offsets[idx]
    u = v + 0.5 * q * (np.sum(pts * pts, axis=1) - 1.0)
    return float(u[0]) if np.ndim(x) == 1 else u


def triangle_quadrature(
    f: Callable[[np.ndarray], np.ndarray], tri, rule: Optional[TriangleRule] = None
) -> float:
    """
    Integrate a vectorized f (points of shape (k, 2) -> (k,)) over a triangle.

    Raises:
        DegenerateTriangle: if the triangle area is below 1e-14
    """
    rule = rule or triangle_rule()
    a, b, c = np.asarray(tri, dtype=float).reshape(3, 2)
    e1, e2 = b - a, c - a
    area = 0.5 * abs(e1[0] * e2[1] - e1[1] * e2[0])
    if area < MIN_FACE_AREA:
        raise DegenerateTriangle(f"triangle area {area:.3e} below {MIN_FACE_AREA:.0e}")
    nodes = a + rule.points[:, :1] * e1 + rule.points[:, 1:] * e2
    return float(2.0 * area * np.dot(rule.weights, np.asarray(f(nodes), dtype=float)))


def cost(mesh: SurfaceMesh, q: float, rule: Optional[TriangleRule] = None) -> float:
    """
    Discrete resistance Σ_τ ∫_τ dx / (1 + |∇v|_τ + q·x|²) by triangle Gauss quadrature.

    Zero-area faces are skipped.
    """
    rule = rule or triangle_rule()
    tri = mesh.triangles
    areas = mesh.projected_areas
    live = areas > MIN_FACE_AREA
    tri, areas, grad = tri[live], areas[live], mesh.face_gradients[live]
    e1 = tri[:, 1] - tri[:, 0]
    e2 = tri[:, 2] - tri[:, 0]
    nodes = (
        tri[:, None, 0, :]
        + rule.points[None, :, :1] * e1[:, None, :]
        + rule.points[None, :, 1:] * e2[:, None, :]
    )
    slope = grad[:, None, :] + q * nodes
    integrand = 1.0 / (1.0 + np.sum(slope * slope, axis=2))
    return float(2.0 * np.sum(areas * (integrand @ rule.weights)))


def radial_params(solution, rings: int, points_per_ring: int, stagger: bool = False) -> ParamVector:
    """
    Parameter points on concentric rings sampling a radial profile on the unit disk.

    The first ring sits at the cap radius a*; the cap is flat in v so nothing is
    placed inside it.
    """
    if abs(solution.R - 1.0) > 1e-12:
        raise DomainError("the discretized problem lives on the unit disk (R = 1)")
    if rings < 1 or points_per_ring < 1:
        raise DomainError("need at least one ring with one point")
    radii = solution.a_star + (1.0 - solution.a_star) * np.arange(rings) / rings
    z = np.clip(np.asarray(solution.height(radii)) / solution.M, 0.0, 1.0)
    rows = []
    for k, (radius, height) in enumerate(zip(radii, z)):
        phase = (math.pi / points_per_ring) * (k % 2) if stagger else 0.0
        theta = np.mod(phase + TWO_PI * np.arange(points_per_ring) / points_per_ring, TWO_PI)
        rows.append(np.column_stack((np.full(points_per_ring, radius), theta, np.full(points_per_ring, height))))
    return ParamVector(np.vstack(rows))


def radial_seed(solution, m: int) -> ParamVector:
    """Exactly m ring points approximating a radial solution, used to seed the optimizer."""
    rings = max(1, min(m, int(round(math.sqrt(m / 2.0)))))
    per_ring = m // rings
    params = radial_params(solution, rings, per_ring).points
    extra = m - params.shape[0]
    if extra:
        theta = np.mod(math.pi / per_ring + TWO_PI * np.arange(extra) / extra, TWO_PI)
        first = params[0]
        params = np.vstack((params, np.column_stack((np.full(extra, first[0]), theta, np.full(extra, first[2])))))
    return ParamVector(params)
