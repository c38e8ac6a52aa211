"""
Scalar Numerics Module

Bracketing root finder, bounded scalar minimizer, adaptive integrator and
Gauss-Legendre rules. Thin wrappers over scipy that translate its status
reporting into the package's exceptions.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable
import logging

import numpy as np
from scipy import integrate as sp_integrate
from scipy import optimize as sp_optimize

from app.config import (
    INTEGRATE_LIMIT,
    INTEGRATE_RTOL,
    INTEGRATE_TOL,
    MINIMIZE_TOL,
    ROOT_MAXITER,
    ROOT_TOL,
)
from app.errors import DomainError, NoConvergence, NoSignChange

logger = logging.getLogger(__name__)

ScalarFn = Callable[[float], float]


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not (np.isfinite(self.lo) and np.isfinite(self.hi)) or not self.lo < self.hi:
            raise DomainError(f"bracket needs finite lo < hi, got [{self.lo}, {self.hi}]")

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class QuadratureRule1D:
    """Nodes and weights on [-1, 1]."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def on_interval(self, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        """Nodes and weights mapped affinely onto [a, b]."""
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.nodes, half * self.weights


def find_root(f: ScalarFn, bracket: Bracket, tol: float = ROOT_TOL, maxiter: int = ROOT_MAXITER) -> float:
    """
    Locate a root of f inside a sign-changing bracket with Brent's method.

    Args:
        f: Continuous scalar function
        bracket: Interval with f(lo)·f(hi) <= 0
        tol: Absolute tolerance on the root location
        maxiter: Iteration cap

    Returns:
        The root estimate

    Raises:
        NoSignChange: if f has the same strict sign at both ends
        NoConvergence: if the iteration cap is reached
    """
    f_lo = float(f(bracket.lo))
    f_hi = float(f(bracket.hi))
    if f_lo == 0.0:
        return bracket.lo
    if f_hi == 0.0:
        return bracket.hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise NoSignChange(
            f"f({bracket.lo:.6g})={f_lo:.3e} and f({bracket.hi:.6g})={f_hi:.3e} share a sign"
        )
    root, info = sp_optimize.brentq(
        f, bracket.lo, bracket.hi, xtol=tol, maxiter=maxiter, full_output=True, disp=False
    )
    if not info.converged:
        raise NoConvergence(f"Brent root search stopped after {info.iterations} iterations: {info.flag}")
    return float(root)


def minimize_scalar(f: ScalarFn, bracket: Bracket, tol: float = MINIMIZE_TOL, maxiter: int = 500) -> float:
    """Bounded Brent minimization; f is assumed unimodal on the bracket."""
    res = sp_optimize.minimize_scalar(
        f, bounds=(bracket.lo, bracket.hi), method="bounded", options={"xatol": tol, "maxiter": maxiter}
    )
    if not res.success:
        raise NoConvergence(f"bounded minimization failed: {res.message}")
    return float(res.x)


def integrate(
    f: ScalarFn,
    a: float,
    b: float,
    tol: float = INTEGRATE_TOL,
    rtol: float = INTEGRATE_RTOL,
    limit: int = INTEGRATE_LIMIT,
) -> float:
    """
    Adaptive Gauss-Kronrod quadrature of f over [a, b].

    Raises:
        NoConvergence: if the subdivision limit is reached before the error target
    """
    if a == b:
        return 0.0
    value, abserr, info, *rest = sp_integrate.quad(
        f, a, b, epsabs=tol, epsrel=rtol, limit=limit, full_output=1
    )
    ier = len(rest)
    if ier and abserr > 10.0 * max(tol, rtol * abs(value)):
        raise NoConvergence(
            f"adaptive quadrature on [{a:.6g}, {b:.6g}] did not reach {tol:.1e} "
            f"(estimate {abserr:.2e}, {info['last']} subintervals): {rest[0]}"
        )
    return float(value)


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureRule1D:
    """Gauss-Legendre rule with n nodes on [-1, 1], exact up to degree 2n-1."""
    if n < 1:
        raise DomainError(f"Gauss-Legendre order must be positive, got {n}")
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return QuadratureRule1D(nodes=nodes, weights=weights)


def composite_gauss(f: Callable[[np.ndarray], np.ndarray], grid: np.ndarray, order: int = 8) -> np.ndarray:
    """Per-interval Gauss-Legendre integrals of a vectorized f over a grid."""
    rule = gauss_legendre(order)
    left, right = grid[:-1, None], grid[1:, None]
    half = 0.5 * (right - left)
    points = 0.5 * (left + right) + half * rule.nodes[None, :]
    return (f(points) * rule.weights[None, :]).sum(axis=1) * half[:, 0]
