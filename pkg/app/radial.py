"""
Radial Profile Module

Minimizer of the Newton functional over radial q-concave profiles on a disk of
radius R: a parabolic cap on [0, a*] followed by a tail solving the radial
Euler-Lagrange equation -r u' / (1 + u'^2)^2 = η*. The cap radius is found
through the chain a_M -> η(a) -> ζ_q(a) -> a* of nested root solves.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional
import logging
import math

import numpy as np

from app.config import H_INV_MAXITER, Q_ZERO, RADIAL_SAMPLES
from app.errors import DomainError, NoConvergence, PreconditionError
from app.models import RadialRecord
from app.numerics import Bracket, composite_gauss, find_root, gauss_legendre, integrate

logger = logging.getLogger(__name__)

# tolerances tighten one order per nesting level
_ETA_TOL = 1e-14
_A_TOL = 1e-13
_H_MAX = 0.25
_H_SLACK = 1e-12
_ZETA_SLACK = 1e-9
_TAIL_RULE = gauss_legendre(32)
_HEIGHT_CHUNK = 2048


@dataclass(frozen=True)
class RadialProblem:
    R: float
    M: float
    q: float

    def __post_init__(self) -> None:
        if not self.R > 0:
            raise PreconditionError(f"radius must satisfy R > 0 (got R={self.R})")
        if not self.M > 0:
            raise PreconditionError(f"height bound must satisfy M > 0 (got M={self.M})")
        if self.q < 0:
            raise PreconditionError(f"concavity parameter must satisfy q ≥ 0 (got q={self.q})")
        if self.q * self.R > 1:
            raise PreconditionError(f"single-shock condition qR ≤ 1 violated (qR={self.q * self.R})")
        if 2 * self.M < self.q * self.R**2:
            raise PreconditionError(
                f"high-profile condition 2M ≥ qR² violated (2M={2 * self.M}, qR²={self.q * self.R**2})"
            )


def h_fun(t):
    """h(t) = -t / (1 + t^2)^2 on t ≤ -1, increasing from 0 to 1/4."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr > -1.0):
        raise DomainError("h is only considered on t ≤ -1")
    value = -t_arr / (1.0 + t_arr**2) ** 2
    return float(value) if value.ndim == 0 else value


def _h_prime(t):
    return (3.0 * t * t - 1.0) / (1.0 + t * t) ** 3


def _h_inv_scalar(s: float) -> float:
    lo = -(s ** (-1.0 / 3.0) + 1.0)
    hi = -1.0
    t = -max(1.0, s ** (-1.0 / 3.0))
    for _ in range(H_INV_MAXITER):
        g = -t / (1.0 + t * t) ** 2 - s
        if g == 0.0:
            return t
        if g < 0:
            lo = t
        else:
            hi = t
        t_new = t - g / _h_prime(t)
        if not lo <= t_new <= hi:
            t_new = 0.5 * (lo + hi)
        if abs(t_new - t) <= 1e-15 * abs(t):
            return t_new
        t = t_new
    raise NoConvergence(f"h⁻¹({s}) did not converge")


def h_inv(s):
    """Inverse of h on (0, 1/4]: Newton from the asymptotic seed -s^(-1/3), bisection safeguard."""
    s_arr = np.asarray(s, dtype=float)
    if np.any(~(s_arr > 0.0)) or np.any(s_arr > _H_MAX * (1.0 + _H_SLACK)):
        raise DomainError("h⁻¹ is defined on (0, 1/4] only")
    if s_arr.ndim == 0:
        return _h_inv_scalar(min(float(s_arr), _H_MAX))
    s_arr = np.minimum(s_arr, _H_MAX)
    lo = -(s_arr ** (-1.0 / 3.0) + 1.0)
    hi = np.full_like(s_arr, -1.0)
    t = -np.maximum(1.0, s_arr ** (-1.0 / 3.0))
    for _ in range(H_INV_MAXITER):
        g = -t / (1.0 + t * t) ** 2 - s_arr
        lo = np.where(g < 0, t, lo)
        hi = np.where(g > 0, t, hi)
        t_new = np.where(g == 0.0, t, t - g / _h_prime(t))
        outside = (t_new < lo) | (t_new > hi)
        t_new = np.where(outside, 0.5 * (lo + hi), t_new)
        done = np.all(np.abs(t_new - t) <= 1e-15 * np.abs(t))
        t = t_new
        if done:
            return t
    raise NoConvergence("vectorized h⁻¹ did not converge")


def psi(a: float, eta: float, R: float) -> float:
    """Height drop -∫_a^R h⁻¹(η/r) dr of the Euler-Lagrange tail started at a."""
    if a >= R:
        return 0.0
    return -integrate(lambda r: h_inv(eta / r), a, R)


def _phi(a: float, R: float) -> float:
    return psi(a, a / 4.0, R)


def compute_aM(R: float, M: float) -> float:
    """Smallest feasible cap radius: the unique a in (0, R) with φ(a) = M."""
    if not (R > 0 and M > 0):
        raise DomainError(f"need R > 0 and M > 0, got R={R}, M={M}")
    lo = 0.5 * R
    for _ in range(200):
        if _phi(lo, R) > M:
            break
        lo *= 0.5
    else:
        raise NoConvergence(f"could not bracket a_M for R={R}, M={M}")
    a_M = find_root(lambda a: _phi(a, R) - M, Bracket(lo, R), tol=_A_TOL * R)
    logger.debug("a_M(R=%g, M=%g) = %.15g", R, M, a_M)
    return a_M


def eta_of_a(a: float, R: float, M: float, a_M: Optional[float] = None) -> float:
    """
    Euler-Lagrange constant η(a) in (0, a/4] of the tail that drops by M over [a, R].

    Raises:
        DomainError: if a < a_M or a ≥ R
    """
    if a_M is None:
        a_M = compute_aM(R, M)
    if a < a_M * (1.0 - 1e-12) or a >= R:
        raise DomainError(f"η(a) needs a_M ≤ a < R, got a={a}, a_M={a_M}, R={R}")
    top = a / 4.0
    excess = psi(a, top, R) - M
    if excess >= 0.0:
        return top
    lo = top / 2.0
    for _ in range(200):
        if psi(a, lo, R) > M:
            break
        lo /= 2.0
    else:
        raise NoConvergence(f"could not bracket η({a})")
    return find_root(lambda e: psi(a, e, R) - M, Bracket(lo, top), tol=_ETA_TOL * a)


def eta_prime(a: float, R: float, M: float, a_M: Optional[float] = None) -> float:
    """η'(a) from the implicit-function identity η' ∫_a^R dr/(r h'(h⁻¹(η/r))) = h⁻¹(η/a)."""
    eta = eta_of_a(a, R, M, a_M)
    denom = integrate(lambda r: 1.0 / (r * _h_prime(h_inv(eta / r))), a, R)
    return h_inv(eta / a) / denom


def gamma_q(a: float, q: float) -> float:
    """Magnitude of the optimal kink slope at the cap radius a; ≥ 1, equal to 1 when q = 0."""
    aq2 = (a * q) ** 2
    return math.sqrt(0.5 * (3.0 * aq2 + 1.0 + math.sqrt(9.0 * aq2**2 + 10.0 * aq2 + 1.0)))


def zeta_q(a: float, R: float, q: float) -> float:
    """Height drop of the tail whose slope at a equals -γ_q(a)."""
    if not 0.0 < a <= R:
        raise DomainError(f"ζ_q needs 0 < a ≤ R, got a={a}")
    return psi(a, a * h_fun(-gamma_q(a, q)), R)


def compute_a_star(prob: RadialProblem, a_M: Optional[float] = None) -> float:
    """Optimal cap radius: root of ζ_q(a) = M on [a_M, R); a_M itself when q = 0."""
    if a_M is None:
        a_M = compute_aM(prob.R, prob.M)
    if prob.q < Q_ZERO:
        return a_M
    # near q = 0 the sign of ζ_q(a_M) - M is quadrature noise
    if zeta_q(a_M, prob.R, prob.q) - prob.M <= _ZETA_SLACK:
        return a_M
    return find_root(
        lambda a: zeta_q(a, prob.R, prob.q) - prob.M, Bracket(a_M, prob.R), tol=_A_TOL * prob.R
    )


def energy_E(a: float, prob: RadialProblem, a_M: Optional[float] = None, eta: Optional[float] = None) -> float:
    """Resistance of the cap-plus-tail profile with cap radius a."""
    if a_M is None:
        a_M = compute_aM(prob.R, prob.M)
    if a < a_M * (1.0 - 1e-12):
        raise DomainError(f"energy needs a ≥ a_M, got a={a}, a_M={a_M}")
    q = prob.q
    cap = 0.5 * a * a if q < Q_ZERO else math.log1p((q * a) ** 2) / (2.0 * q * q)
    if eta is None:
        eta = eta_of_a(a, prob.R, prob.M, a_M)
    tail = integrate(lambda r: r / (1.0 + h_inv(eta / r) ** 2), a, prob.R)
    return cap + tail


def energy_derivative(a: float, prob: RadialProblem, a_M: Optional[float] = None) -> float:
    """Closed-form 𝓔'(a) = a/(1+q²a²) - a/(1+t²) + 2ηt with t = h⁻¹(η(a)/a)."""
    eta = eta_of_a(a, prob.R, prob.M, a_M)
    t = h_inv(eta / a)
    return a / (1.0 + (prob.q * a) ** 2) - a / (1.0 + t * t) + 2.0 * eta * t


@dataclass(frozen=True)
class RadialSolution:
    R: float
    M: float
    q: float
    a_M: float
    a_star: float
    eta_star: float
    r: np.ndarray = field(repr=False)
    u: np.ndarray = field(repr=False)

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.r.tolist(), self.u.tolist()))

    @property
    def problem(self) -> RadialProblem:
        return RadialProblem(self.R, self.M, self.q)

    def derivative(self, r):
        """u'(r): q·r on the cap, h⁻¹(η*/r) on the tail."""
        r_arr = np.asarray(r, dtype=float)
        tail = r_arr > self.a_star
        du = self.q * r_arr
        if np.any(tail):
            du = np.where(tail, h_inv(self.eta_star / np.where(tail, r_arr, self.a_star)), du)
        return float(du) if du.ndim == 0 else du

    def height(self, r):
        """Exact u(r); the tail drop from r to R is integrated by a 32-point Gauss rule."""
        r_arr = np.atleast_1d(np.asarray(r, dtype=float))
        if np.any(r_arr < 0) or np.any(r_arr > self.R * (1.0 + 1e-12)):
            raise DomainError(f"radial profile is defined on [0, {self.R}]")
        r_arr = np.minimum(r_arr, self.R)
        out = 0.5 * self.q * (r_arr**2 - self.a_star**2) + self.M
        tail = np.nonzero(r_arr > self.a_star)[0]
        nodes, weights = _TAIL_RULE.nodes, _TAIL_RULE.weights
        for start in range(0, tail.size, _HEIGHT_CHUNK):
            idx = tail[start:start + _HEIGHT_CHUNK]
            lo = r_arr[idx][:, None]
            half = 0.5 * (self.R - lo)
            s = lo + half * (nodes[None, :] + 1.0)
            out[idx] = -(h_inv(self.eta_star / s) @ weights) * half[:, 0]
        return float(out[0]) if np.ndim(r) == 0 else out

    @cached_property
    def resistance(self) -> float:
        return energy_E(self.a_star, self.problem, self.a_M, self.eta_star)

    def to_record(self) -> RadialRecord:
        return {
            "R": self.R,
            "M": self.M,
            "q": self.q,
            "a_M": self.a_M,
            "a_star": self.a_star,
            "eta_star": self.eta_star,
            "resistance": self.resistance,
        }


def _radial_grid(R: float, a_star: float, n_samples: int) -> tuple[np.ndarray, np.ndarray]:
    n_cap = max(2, n_samples // 4)
    n_tail = max(2, n_samples - n_cap)
    cap = np.linspace(0.0, a_star, n_cap)
    # quadratic clustering towards the slope jump at a*
    tail = a_star + (R - a_star) * (np.arange(1, n_tail + 1) / n_tail) ** 2
    tail[-1] = R
    return cap, tail


def solve_radial(prob: RadialProblem, n_samples: int = RADIAL_SAMPLES) -> RadialSolution:
    """
    Unique minimizer of the radial problem, sampled on a grid refined near a*.

    Raises:
        NoConvergence: propagated from the nested root solves
    """
    if n_samples < 4:
        raise DomainError(f"need at least 4 samples, got {n_samples}")
    a_M = compute_aM(prob.R, prob.M)
    a_star = compute_a_star(prob, a_M)
    eta_star = a_star / 4.0 if prob.q < Q_ZERO else a_star * h_fun(-gamma_q(a_star, prob.q))
    cap, tail = _radial_grid(prob.R, a_star, n_samples)
    u_cap = 0.5 * prob.q * (cap**2 - a_star**2) + prob.M
    edges = np.concatenate(([a_star], tail))
    drops = composite_gauss(lambda s: h_inv(eta_star / s), edges, order=16)
    # u(r_k) = -∫_{r_k}^R h⁻¹, accumulated from the rim inwards
    u_tail = -np.append(np.cumsum(drops[::-1])[::-1][1:], 0.0)
    u_tail[-1] = 0.0
    solution = RadialSolution(
        R=prob.R,
        M=prob.M,
        q=prob.q,
        a_M=a_M,
        a_star=a_star,
        eta_star=eta_star,
        r=np.concatenate((cap, tail)),
        u=np.concatenate((u_cap, u_tail)),
    )
    logger.info(
        "✅ Solved radial problem R=%g M=%g q=%g: a_M=%.12g a*=%.12g η*=%.12g",
        prob.R, prob.M, prob.q, a_M, a_star, eta_star,
    )
    return solution


def resistance_radial(
    r: np.ndarray,
    u: np.ndarray,
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    order: int = 8,
) -> float:
    """
    Radial resistance ∫ r dr / (1 + u'²) of a sampled profile on [0, R].

    Without a derivative u is piecewise linear: each interval contributes
    (r₁² - r₀²) / (2 (1 + s²)).
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    if r.ndim != 1 or r.size < 2 or u.shape != r.shape:
        raise DomainError("need matching 1D arrays with at least 2 nodes")
    dr = np.diff(r)
    if r[0] < 0 or np.any(dr <= 0) or not np.all(np.isfinite(u)):
        raise DomainError("radial grid must start at r ≥ 0 and increase strictly")
    if derivative is not None:
        pieces = composite_gauss(lambda t: t / (1.0 + np.asarray(derivative(t)) ** 2), r, order)
        return float(pieces.sum())
    slopes = np.diff(u) / dr
    return float(np.sum(0.5 * (r[1:] ** 2 - r[:-1] ** 2) / (1.0 + slopes**2)))
