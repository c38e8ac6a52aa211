"""
Verification Module

Independent checks for computed profiles: q-concavity of sampled functions,
the single-shock inequality by Monte Carlo, the infimum over all single-shock
profiles as a universal lower bound, the three-variable arctan inequality behind
the 1D reduction, and brute-force discretized minimizers that bound the true
minimum from above.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Union
import logging
import math

import numpy as np
from scipy.optimize import isotonic_regression

from app.config import (
    CONCAVITY_TOL,
    FD_STEP,
    SHOCK_RAYS,
    SHOCK_TAU_SAMPLES,
    SHOCK_TOL,
    default_seed,
)
from app.errors import ConfigError, DomainError
from app.models import OracleRecord, ShockReportRecord, ShockViolation
from app.numerics import composite_gauss, integrate
from app.optimize import DEConfig, OptimizationTrace, optimize

logger = logging.getLogger(__name__)

FieldFn = Callable[[np.ndarray], np.ndarray]

_MEMBERSHIP_TOL = 1e-12
_TAU_SHRINK = 1.0 - 1e-9
_RANGE_PENALTY = 10.0


@dataclass(frozen=True)
class Interval:
    lo: float = -1.0
    hi: float = 1.0
    dim = 1

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise DomainError(f"interval needs lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def diameter(self) -> float:
        return self.hi - self.lo

    def boundary_distance(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1)
        return np.minimum(x - self.lo, self.hi - x)

    def exit_time(self, x: np.ndarray, direction: np.ndarray) -> np.ndarray:
        """Largest t with x + t·direction still in the interval (inf for a zero direction)."""
        x = np.asarray(x, dtype=float).reshape(-1)
        d = np.asarray(direction, dtype=float).reshape(-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(d > 0, (self.hi - x) / d, np.where(d < 0, (self.lo - x) / d, np.inf))
        return np.maximum(t, 0.0)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """One uniform point in each of count equal strata, shape (count, 1)."""
        u = (np.arange(count) + rng.random(count)) / count
        return (self.lo + u * (self.hi - self.lo))[:, None]


@dataclass(frozen=True)
class Disk:
    radius: float = 1.0
    dim = 2

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise DomainError(f"disk radius must be positive, got {self.radius}")

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    def boundary_distance(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        return self.radius - np.hypot(x[:, 0], x[:, 1])

    def exit_time(self, x: np.ndarray, direction: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, 2)
        d = np.asarray(direction, dtype=float).reshape(-1, 2)
        dd = np.sum(d * d, axis=1)
        xd = np.sum(x * d, axis=1)
        c = np.sum(x * x, axis=1) - self.radius**2
        disc = np.sqrt(np.maximum(xd * xd - dd * c, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(dd > 0, (-xd + disc) / dd, np.inf)
        return np.maximum(t, 0.0)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Area-uniform points, stratified in r² with random angles, shape (count, 2)."""
        s = (np.arange(count) + rng.random(count)) / count
        r = self.radius * np.sqrt(s)
        theta = 2.0 * math.pi * rng.random(count)
        return np.column_stack((r * np.cos(theta), r * np.sin(theta)))


Domain = Union[Interval, Disk]


@dataclass
class ShockReport:
    tested_points: int
    violations: List[ShockViolation] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_record(self) -> ShockReportRecord:
        return {"tested_points": self.tested_points, "violations": list(self.violations), "passed": self.passed}


def sample_segments(domain: Domain, count: int, points: int = 16, seed: Optional[int] = None) -> np.ndarray:
    """Random chords of a disk with equally spaced points, shape (count, points, 2)."""
    if not isinstance(domain, Disk):
        raise DomainError("segment sampling is for two-dimensional domains")
    if points < 3:
        raise DomainError(f"need at least 3 points per segment, got {points}")
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    ends_a = domain.sample(count, rng)
    ends_b = domain.sample(count, rng)[rng.permutation(count)]
    t = np.linspace(0.0, 1.0, points)[None, :, None]
    return ends_a[:, None, :] + t * (ends_b - ends_a)[:, None, :]


def check_qconcave(x, u, q: float, tol: float = CONCAVITY_TOL) -> bool:
    """
    True iff u - (q/2)|x|² has no second difference above tol.

    x is either a strictly increasing 1D grid (u the values on it), or an array of
    segments of shape (S, N, 2) with equally spaced points (u of shape (S, N)).

    Raises:
        DomainError: on fewer than 3 points or a non-increasing grid
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.ndim == 3:
        if x.shape[1] < 3 or x.shape[2] != 2 or u.shape != x.shape[:2]:
            raise DomainError("segments must have shape (S, N ≥ 3, 2) with values (S, N)")
        w = u - 0.5 * q * np.sum(x * x, axis=2)
        second = w[:, 2:] - 2.0 * w[:, 1:-1] + w[:, :-2]
        return bool(np.all(second <= tol))
    if x.ndim != 1 or x.size < 3 or u.shape != x.shape:
        raise DomainError("need a 1D grid with at least 3 points and matching values")
    dx = np.diff(x)
    if np.any(dx <= 0):
        raise DomainError("grid must be strictly increasing")
    w = u - 0.5 * q * x * x
    slopes = np.diff(w) / dx
    return bool(np.all(np.diff(slopes) <= tol))


def check_qconcave_radial(r, u, q: float, tol: float = CONCAVITY_TOL) -> bool:
    """A radial profile is q-concave on the disk iff r ↦ u - (q/2)r² is concave and nonincreasing."""
    if not check_qconcave(r, u, q, tol):
        return False
    r = np.asarray(r, dtype=float)
    w = np.asarray(u, dtype=float) - 0.5 * q * r * r
    return bool(np.all(np.diff(w) <= tol))


def central_gradient(u: FieldFn, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for k in range(x.shape[1]):
        e = np.zeros(x.shape[1])
        e[k] = step
        grad[:, k] = (np.asarray(u(x + e)) - np.asarray(u(x - e))) / (2.0 * step)
    return grad


def check_single_shock(
    u: FieldFn,
    grad: Optional[FieldFn],
    domain: Domain,
    samples: int = SHOCK_RAYS,
    tau_samples: int = SHOCK_TAU_SAMPLES,
    seed: Optional[int] = None,
    tol: float = SHOCK_TOL,
) -> ShockReport:
    """
    Monte Carlo test of u(x - τ∇u(x)) ≤ u(x) + (τ/2)(1 - |∇u(x)|²).

    u and grad act on arrays of points of shape (k, dim). Each sampled x is tested
    at tau_samples values of τ spread up to the exit time of the reflected ray.
    Without grad the gradient is taken by central differences.
    """
    rng = np.random.default_rng(default_seed() if seed is None else seed)
    x = domain.sample(samples, rng)
    g = np.asarray(grad(x), dtype=float).reshape(x.shape) if grad is not None else central_gradient(u, x)
    u_x = np.asarray(u(x), dtype=float).reshape(-1)
    g2 = np.sum(g * g, axis=1)
    exit_t = domain.exit_time(x, -g)
    finite = np.isfinite(exit_t) & (exit_t > 0)
    report = ShockReport(tested_points=int(samples))
    if not finite.any():
        return report
    x, g, u_x, g2, exit_t = x[finite], g[finite], u_x[finite], g2[finite], exit_t[finite]
    fractions = np.arange(1, tau_samples + 1) / tau_samples * _TAU_SHRINK
    tau = exit_t[:, None] * fractions[None, :]
    y = x[:, None, :] - tau[..., None] * g[:, None, :]
    u_y = np.asarray(u(y.reshape(-1, x.shape[1])), dtype=float).reshape(tau.shape)
    deficit = u_y - u_x[:, None] - 0.5 * tau * (1.0 - g2[:, None])
    rows, cols = np.nonzero(deficit > tol)
    for i, j in zip(rows, cols):
        report.violations.append(
            {"x": x[i].tolist(), "tau": float(tau[i, j]), "deficit": float(deficit[i, j])}
        )
    if report.passed:
        logger.info("✅ Single-shock check passed on %d points", samples)
    else:
        logger.warning("⚠️ Single-shock check found %d violations", len(report.violations))
    return report


def _deficit_integrand(M: float) -> Callable[[float], float]:
    def f(s: float) -> float:
        root = math.sqrt(M * M + s * s)
        return s * s / (root * (root + M))

    return f


def lower_bound(domain: Domain, M: float, tol: float = 1e-12) -> float:
    """
    Infimum of the resistance over single-shock profiles with values in [0, M].

    ∫ (1/2)(1 - M/√(M² + d(x)²)) dx with d the distance to the boundary.
    """
    if not M > 0:
        raise DomainError(f"height bound must satisfy M > 0 (got M={M})")
    f = _deficit_integrand(M)
    if isinstance(domain, Interval):
        c = 0.5 * domain.diameter
        return integrate(f, 0.0, c, tol=tol)
    R = domain.radius
    return math.pi * integrate(lambda r: f(R - r) * r, 0.0, R, tol=tol)


def lower_bound_closed_form(domain: Interval, M: float) -> float:
    """c - M·asinh(c/M) for an interval of half-length c."""
    if not M > 0:
        raise DomainError(f"height bound must satisfy M > 0 (got M={M})")
    c = 0.5 * domain.diameter
    return c - M * math.asinh(c / M)


@dataclass(frozen=True)
class FLambdaPoint:
    x: float
    y: float
    z: float
    lam: float

    def in_domain(self, tol: float = _MEMBERSHIP_TOL) -> bool:
        x, y, z, lam = self.x, self.y, self.z, self.lam
        return (
            -y - tol <= x <= lam + tol
            and -lam - tol <= 2.0 * y <= tol
            and x - lam - tol <= z <= tol
        )


def _f_lambda(x, y, z, lam):
    return (
        np.arctan(x) + np.arctan(y) + np.arctan(z) - np.arctan(lam)
        + np.arctan(lam - x) - np.arctan(y + z)
    )


def eval_F_lambda(p: FLambdaPoint) -> float:
    if not p.in_domain():
        raise DomainError(f"{p} lies outside the admissible polytope")
    return float(_f_lambda(p.x, p.y, p.z, p.lam))


def scan_F_lambda(lam: float, step: float = 0.01) -> tuple[float, FLambdaPoint]:
    """Grid minimum of F_λ over its polytope, with the minimizing point."""
    if not lam > 0:
        raise DomainError(f"λ must be positive, got {lam}")
    count = int(round(lam / step))
    xs = np.linspace(0.0, lam, count + 1)
    ys = np.linspace(-0.5 * lam, 0.0, max(1, int(round(0.5 * lam / step))) + 1)
    zs = np.linspace(-lam, 0.0, count + 1)
    X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
    inside = (X >= -Y - _MEMBERSHIP_TOL) & (Z >= X - lam - _MEMBERSHIP_TOL)
    values = np.where(inside, _f_lambda(X, Y, Z, lam), np.inf)
    k = int(np.argmin(values))
    i, j, l = np.unravel_index(k, values.shape)
    point = FLambdaPoint(float(xs[i]), float(ys[j]), float(zs[l]), lam)
    return float(values.flat[k]), point


def equality_cases(lam: float, count: int = 11) -> List[FLambdaPoint]:
    """Points on the three segments where F_λ vanishes."""
    ys = np.linspace(-0.5 * lam, 0.0, count)
    zs = np.linspace(-lam, 0.0, count)
    points = [FLambdaPoint(lam, float(y), 0.0, lam) for y in ys]
    points += [FLambdaPoint(float(-y), float(y), float(-y - lam), lam) for y in ys]
    points += [FLambdaPoint(0.0, 0.0, float(z), lam) for z in zs]
    return points


@dataclass
class OracleResult:
    """Best discretized profile found by a brute-force oracle."""

    resistance: float
    nodes: np.ndarray
    heights: np.ndarray
    trace: OptimizationTrace

    def to_record(self) -> OracleRecord:
        return {
            "resistance": float(self.resistance),
            "intervals": int(self.nodes.size - 1),
            "evaluations": int(self.trace.evaluations),
        }

    def to_columns(self, coord: str) -> Dict[str, np.ndarray]:
        """Node coordinates under `coord` and heights under `u`, ready for save_columns."""
        return {coord: self.nodes, "u": self.heights}


def _project_concave(w: np.ndarray, h: float, lo: float, hi: float, nonincreasing: bool = False) -> np.ndarray:
    """Concave (optionally nonincreasing) node values in [lo, hi] near w."""
    slopes = np.diff(w) / h
    slopes = isotonic_regression(slopes, increasing=False).x
    if nonincreasing:
        slopes = np.minimum(slopes, 0.0)
    out = w[0] + h * np.concatenate(([0.0], np.cumsum(slopes)))
    out += np.mean(w) - np.mean(out)
    if out.min() < lo:
        out += lo - out.min()
    return np.minimum(out, hi)


def _piece_minimum(start: np.ndarray, slopes: np.ndarray, left: np.ndarray, right: np.ndarray, q: float, base) -> float:
    """Minimum over all pieces of start + s·(t - left) + base(t), base a parabola of curvature q."""
    values = [start + slopes * (right - left) + base(right), start + base(left)]
    if q > 0:
        y = np.clip(-slopes / q, left, right)
        values.append(start + slopes * (y - left) + base(y))
    return float(np.min(np.concatenate(values)))


def _oracle_config(budget: int, seed: Optional[int], workers: int) -> DEConfig:
    config = DEConfig(
        population_size=min(40, max(4, budget // 100)),
        max_evaluations=int(budget),
        seed=default_seed() if seed is None else int(seed),
        workers=workers,
    )
    return config.validate()


def oracle_discrete_1d(
    M: float,
    q: float,
    N: int = 64,
    budget: int = 50_000,
    seed: Optional[int] = None,
    workers: int = 1,
) -> OracleResult:
    """
    Upper bound on the 1D minimum by DE over piecewise parabolic profiles.

    The profile is u = w_h + (q/2)(y² - 1) with w_h the piecewise linear
    interpolant of N + 1 node values on [-1, 1]; candidates are projected onto
    concave w, and range violations of u are penalized.

    Raises:
        ConfigError: on N < 4 or an invalid budget
    """
    if N < 4:
        raise ConfigError(f"oracle needs N ≥ 4 intervals, got {N}")
    if not M > 0 or q < 0:
        raise ConfigError(f"need M > 0 and q ≥ 0, got M={M}, q={q}")
    y = np.linspace(-1.0, 1.0, N + 1)
    h = 2.0 / N
    base = 0.5 * q * (y * y - 1.0)
    w_hi = M + 0.5 * q

    def parabola(t):
        return 0.5 * q * (t * t - 1.0)

    def repair(w: np.ndarray) -> np.ndarray:
        return _project_concave(w, h, 0.0, w_hi)

    def objective(w: np.ndarray) -> float:
        slopes = np.diff(w) / h
        pieces = composite_gauss(lambda t: 1.0 / (1.0 + (slopes[:, None] + q * t) ** 2), y)
        u = w + base
        low = _piece_minimum(w[:-1], slopes, y[:-1], y[1:], q, parabola)
        violation = max(0.0, float(u.max()) - M) + max(0.0, -low)
        return float(pieces.sum()) + _RANGE_PENALTY * violation

    config = _oracle_config(budget, seed, workers)
    trace = optimize(objective, [(0.0, w_hi)] * (N + 1), config, repair=repair)
    heights = trace.best_params + base
    logger.info("✅ 1D oracle M=%g q=%g N=%d: %.12g", M, q, N, trace.final_cost)
    return OracleResult(resistance=trace.final_cost, nodes=y, heights=heights, trace=trace)


def oracle_discrete_radial(
    R: float,
    M: float,
    q: float,
    N: int = 64,
    budget: int = 100_000,
    seed: Optional[int] = None,
    workers: int = 1,
) -> OracleResult:
    """
    Upper bound on the radial minimum by DE over node values of w = u - (q/2)r².

    w is kept nonincreasing and concave by projection; u = w_h + (q/2)r² must stay
    in [0, M] and violations are penalized. The value is ∫₀^R r dr / (1 + u'²).
    """
    if N < 4:
        raise ConfigError(f"oracle needs N ≥ 4 intervals, got {N}")
    if not (R > 0 and M > 0) or q < 0:
        raise ConfigError(f"need R > 0, M > 0 and q ≥ 0, got R={R}, M={M}, q={q}")
    r = np.linspace(0.0, R, N + 1)
    h = R / N
    base = 0.5 * q * r * r
    w_lo, w_hi = -0.5 * q * R * R, M

    def parabola(t):
        return 0.5 * q * t * t

    def repair(w: np.ndarray) -> np.ndarray:
        return _project_concave(w, h, w_lo, w_hi, nonincreasing=True)

    def objective(w: np.ndarray) -> float:
        slopes = np.diff(w) / h
        pieces = composite_gauss(lambda t: t / (1.0 + (slopes[:, None] + q * t) ** 2), r)
        u = w + base
        low = _piece_minimum(w[:-1], slopes, r[:-1], r[1:], q, parabola)
        violation = max(0.0, float(u.max()) - M) + max(0.0, -low)
        return float(pieces.sum()) + _RANGE_PENALTY * violation

    config = _oracle_config(budget, seed, workers)
    trace = optimize(objective, [(w_lo, w_hi)] * (N + 1), config, repair=repair)
    heights = trace.best_params + base
    logger.info("✅ Radial oracle R=%g M=%g q=%g N=%d: %.12g", R, M, q, N, trace.final_cost)
    return OracleResult(resistance=trace.final_cost, nodes=r, heights=heights, trace=trace)
