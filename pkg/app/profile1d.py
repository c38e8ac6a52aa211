"""
One-Dimensional Profile Module

Closed-form minimizer of the Newton functional over q-concave profiles on
[-1, 1] with values in [0, M], the reduced Γ family it is selected from, and
resistance evaluation of sampled profiles.
"""

from dataclasses import dataclass
from typing import Callable, Optional
import logging
import math

import numpy as np

from app.config import PROFILE_SAMPLES, Q_ZERO, ROOT_TOL
from app.errors import DomainError, PreconditionError
from app.models import Profile1DRecord
from app.numerics import Bracket, composite_gauss, find_root, minimize_scalar

logger = logging.getLogger(__name__)

_EPS = 1e-12


def check_problem_1d(M: float, q: float) -> None:
    """Raise PreconditionError naming the first violated modelling assumption."""
    if not M > 0:
        raise PreconditionError(f"height bound must satisfy M > 0 (got M={M})")
    if q < 0:
        raise PreconditionError(f"concavity parameter must satisfy q ≥ 0 (got q={q})")
    if q > 1:
        raise PreconditionError(f"single-shock condition q ≤ 1 violated (got q={q})")
    if 2 * M < q:
        raise PreconditionError(f"high-profile condition 2M ≥ q violated (2M={2 * M}, q={q})")


def eval_R(gamma: float, M: float, q: float) -> float:
    """Resistance of the parabola-plus-tent profile with kink at gamma."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    if not M > 0 or q < 0:
        raise DomainError(f"need M > 0 and q ≥ 0, got M={M}, q={q}")
    side = 2.0 * (1.0 - gamma) ** 3 / (M**2 + (1.0 - gamma) ** 2)
    if q < Q_ZERO:
        return 2.0 * gamma + side
    return 2.0 / q * math.atan(q * gamma) + side


def eval_phi(gamma: float, M: float, q: float) -> float:
    """Numerator of dR/dγ; strictly increasing in γ under the problem assumptions."""
    if not 0.0 <= gamma <= 1.0:
        raise DomainError(f"gamma must lie in [0, 1], got {gamma}")
    if not M > 0 or not 0.0 <= q <= 1.0 or 2 * M < q:
        raise DomainError(f"need M > 0, 0 ≤ q ≤ 1 and 2M ≥ q, got M={M}, q={q}")
    s = 1.0 - gamma
    return M**4 - M**2 * s**2 - q**2 * gamma**2 * s**4 - 3.0 * M**2 * q**2 * gamma**2 * s**2


@dataclass(frozen=True)
class Profile1D:
    """The optimal profile u_{M;q}: central parabola of curvature q, linear sides."""

    M: float
    q: float
    gamma_star: float

    def __call__(self, x):
        return eval_profile(self, x)

    def derivative(self, x):
        """Analytic u'(x); at the kinks the one-sided value from the cap is returned."""
        x_arr = np.asarray(x, dtype=float)
        g = self.gamma_star
        side = -np.sign(x_arr) * self.M / (1.0 - g)
        du = np.where(np.abs(x_arr) <= g, self.q * x_arr, side)
        return float(du) if du.ndim == 0 else du

    def grid(self, n: int = PROFILE_SAMPLES) -> np.ndarray:
        """Uniform grid on [-1, 1] with the kinks ±γ* inserted."""
        if n < 2:
            raise DomainError(f"need at least 2 samples, got {n}")
        x = np.linspace(-1.0, 1.0, n)
        if self.gamma_star > 0:
            x = np.union1d(x, [-self.gamma_star, self.gamma_star])
        return x

    @property
    def resistance(self) -> float:
        return eval_R(self.gamma_star, self.M, self.q)

    def to_record(self) -> Profile1DRecord:
        return {"M": self.M, "q": self.q, "gamma_star": self.gamma_star, "resistance": self.resistance}


def solve_1d(M: float, q: float) -> Profile1D:
    """
    Unique minimizer of the 1D problem over q-concave profiles with values in [0, M].

    Args:
        M: Height bound
        q: Concavity parameter, 0 ≤ q ≤ 1 and 2M ≥ q

    Returns:
        Profile1D with γ* = 0 when M ≥ 1, otherwise the root of φ_{M;q} in (0, 1)

    Raises:
        PreconditionError: if a modelling assumption is violated
    """
    check_problem_1d(M, q)
    if M >= 1.0:
        logger.info("✅ M=%g ≥ 1: optimal profile is the tent M(1-|x|)", M)
        return Profile1D(M=M, q=q, gamma_star=0.0)
    gamma = find_root(lambda g: eval_phi(g, M, q), Bracket(0.0, 1.0), tol=ROOT_TOL)
    logger.info("✅ Solved 1D problem M=%g q=%g: γ*=%.12g", M, q, gamma)
    return Profile1D(M=M, q=q, gamma_star=gamma)


def minimize_R(M: float, q: float) -> float:
    """Minimize R_{M;q} directly on [0, 1]; cross-check of the root route in solve_1d."""
    check_problem_1d(M, q)
    return minimize_scalar(lambda g: eval_R(g, M, q), Bracket(0.0, 1.0))


def eval_profile(p: Profile1D, x):
    """Exact piecewise evaluation of the profile at x in [-1, 1]."""
    x_arr = np.asarray(x, dtype=float)
    if np.any(np.abs(x_arr) > 1.0 + _EPS):
        raise DomainError("profile is defined on [-1, 1] only")
    g = p.gamma_star
    ax = np.minimum(np.abs(x_arr), 1.0)
    cap = 0.5 * p.q * (x_arr**2 - g**2) + p.M
    side = p.M * (1.0 - ax) / (1.0 - g)
    u = np.where(ax <= g, cap, side)
    return float(u) if u.ndim == 0 else u


def resistance_1d(
    x: np.ndarray,
    u: np.ndarray,
    derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    order: int = 8,
) -> float:
    """
    Resistance ∫ dx / (1 + u'²) of a sampled profile.

    Without a derivative, u is read as piecewise linear (exact for tents); with an
    analytic derivative each grid interval is integrated by Gauss-Legendre.
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if x.ndim != 1 or x.size < 2 or u.shape != x.shape:
        raise DomainError("need matching 1D arrays with at least 2 nodes")
    dx = np.diff(x)
    if np.any(dx <= 0) or not np.all(np.isfinite(u)):
        raise DomainError("grid must be strictly increasing with finite values")
    if derivative is not None:
        pieces = composite_gauss(lambda t: 1.0 / (1.0 + np.asarray(derivative(t)) ** 2), x, order)
        return float(pieces.sum())
    slopes = np.diff(u) / dx
    return float(np.sum(dx / (1.0 + slopes**2)))


@dataclass(frozen=True)
class GammaFamilyParams:
    """Parameters (a, b, m, α, β) of the line-parabola-line family."""

    a: float
    b: float
    m: float
    alpha: float
    beta: float

    def in_family(self, M: float, tol: float = _EPS) -> bool:
        a, b, m = self.a, self.b, self.m
        return (
            -1.0 - tol <= a <= min(1.0, -1.0 + m) + tol
            and max(-1.0, 1.0 - m) - tol <= b <= 1.0 + tol
            and a <= b + tol
            and -tol <= m <= M + tol
            and -tol <= self.alpha <= m + tol
            and -tol <= self.beta <= m + tol
        )


def _side_term(length, drop):
    length = np.asarray(length, dtype=float)
    denom = length**2 + np.asarray(drop, dtype=float) ** 2
    safe = np.where(denom > 0, denom, 1.0)
    return np.where(denom > 0, length**3 / safe, 0.0)


def _gamma_value(a, b, m, alpha, beta, q):
    if q < Q_ZERO:
        middle = b - a
    else:
        middle = 2.0 / q * np.arctan(0.5 * q * (b - a))
    return _side_term(a + 1.0, m - alpha) + middle + _side_term(1.0 - b, beta - m)


def oracle_Gamma(p: GammaFamilyParams, M: float, q: float) -> float:
    """Resistance of the family member described by p (explicit formula)."""
    if not p.in_family(M):
        raise DomainError(f"parameters {p} are outside the admissible family for M={M}")
    return float(_gamma_value(p.a, p.b, p.m, p.alpha, p.beta, q))


def scan_gamma_family(M: float, q: float, step: float = 0.02) -> tuple[GammaFamilyParams, float]:
    """
    Brute-force grid minimum of Γ over the admissible family.

    The a-grid and b-grid are mirror images so symmetric members are represented.
    """
    count = int(round(2.0 / step))
    idx = np.arange(count + 1)
    a_grid = -1.0 + idx * step
    b_grid = 1.0 - idx * step
    m_count = int(math.floor(M / step + _EPS))
    m_grid = np.append(np.arange(m_count + 1) * step, [] if abs(m_count * step - M) < _EPS else [M])
    A, B = np.meshgrid(a_grid, b_grid, indexing="ij")
    best_value = math.inf
    best = None
    for m in m_grid:
        admissible = (A <= min(1.0, -1.0 + m) + _EPS) & (B >= max(-1.0, 1.0 - m) - _EPS) & (A <= B + _EPS)
        if not admissible.any():
            continue
        heights = m_grid[m_grid <= m + _EPS]
        for alpha in heights:
            values = _gamma_value(
                A[..., None], B[..., None], m, alpha, heights[None, None, :], q
            )
            values = np.where(admissible[..., None], values, np.inf)
            flat = int(np.argmin(values))
            if values.flat[flat] < best_value:
                i, j, k = np.unravel_index(flat, values.shape)
                best_value = float(values.flat[flat])
                best = GammaFamilyParams(
                    a=float(A[i, j]), b=float(B[i, j]), m=float(m), alpha=float(alpha), beta=float(heights[k])
                )
    if best is None:
        raise DomainError(f"no admissible grid point for M={M}")
    logger.debug("Γ grid minimum %.12g at %s", best_value, best)
    return best, best_value
