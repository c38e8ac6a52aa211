"""
Differential Evolution Module

Self-adaptive DE/rand/1/bin (jDE) over a box, and the driver that searches the
lifted-point parameters of the convex-hull surface for the lowest resistance.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Any, Callable, List, Mapping, Optional, Sequence, Tuple
import logging
import math

import numpy as np

from app.config import (
    BOUNDARY_POINTS,
    DE_CR_INIT,
    DE_EVALUATIONS,
    DE_F_INIT,
    DE_F_LOWER,
    DE_F_UPPER,
    DE_POPULATION,
    DE_TAU_CR,
    DE_TAU_F,
    FLOOR_PENALTY,
    LIFTED_POINTS,
    SWEEP_CURVATURE,
    SWEEP_HEIGHTS,
    default_seed,
)
from app.errors import ConfigError, PreconditionError
from app.hull2d import ParamVector, SurfaceMesh, TriangleRule, build_hull, cost, radial_seed, rim_sag, triangle_rule
from app.models import TraceRecord
from app.radial import RadialProblem, solve_radial

logger = logging.getLogger(__name__)

CostFn = Callable[[np.ndarray], float]
RepairFn = Callable[[np.ndarray], np.ndarray]

_FLOOR_SLACK = 1e-12


@dataclass
class DEConfig:
    """Settings of the self-adaptive differential evolution."""

    population_size: int = DE_POPULATION
    max_evaluations: int = DE_EVALUATIONS
    seed: int = field(default_factory=default_seed)
    F_init: float = DE_F_INIT
    CR_init: float = DE_CR_INIT
    tau_F: float = DE_TAU_F
    tau_CR: float = DE_TAU_CR
    F_lower: float = DE_F_LOWER
    F_upper: float = DE_F_UPPER
    workers: int = 1

    def validate(self) -> "DEConfig":
        if self.population_size < 4:
            raise ConfigError(f"population_size must be ≥ 4, got {self.population_size}")
        if self.max_evaluations < self.population_size:
            raise ConfigError(
                f"max_evaluations ({self.max_evaluations}) must be ≥ population_size ({self.population_size})"
            )
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")
        if not (0.0 < self.F_lower and self.F_upper > 0.0):
            raise ConfigError("F_lower and F_upper must be positive")
        if not self.F_lower <= self.F_init <= self.F_lower + self.F_upper:
            raise ConfigError(f"F_init must lie in [F_lower, F_lower + F_upper], got {self.F_init}")
        if not 0.0 <= self.CR_init <= 1.0:
            raise ConfigError(f"CR_init must lie in [0, 1], got {self.CR_init}")
        if not (0.0 <= self.tau_F <= 1.0 and 0.0 <= self.tau_CR <= 1.0):
            raise ConfigError("adaptation probabilities tau_F and tau_CR must lie in [0, 1]")
        if self.workers < 1:
            raise ConfigError(f"workers must be ≥ 1, got {self.workers}")
        return self

    @property
    def mode(self) -> str:
        return "sequential" if self.workers == 1 else f"parallel({self.workers})"

    @classmethod
    def from_mapping(cls, options: Mapping[str, Any]) -> "DEConfig":
        """Build a config from a flat mapping, ignoring keys that are not DE settings."""
        known = {f.name: f for f in fields(cls)}
        aliases = {"pop": "population_size", "evals": "max_evaluations", "budget": "max_evaluations"}
        kwargs = {}
        for key, value in options.items():
            name = aliases.get(key, key)
            if name in known and value is not None:
                kwargs[name] = value
        try:
            config = cls(**kwargs)
            config.population_size = int(config.population_size)
            config.max_evaluations = int(config.max_evaluations)
            config.seed = int(config.seed)
            config.workers = int(config.workers)
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid optimizer settings: {e}") from e
        return config.validate()


@dataclass
class OptimizationTrace:
    best_cost_history: List[Tuple[int, float]]
    best_params: np.ndarray
    final_cost: float
    evaluations: int
    mode: str = "sequential"

    def to_record(self) -> TraceRecord:
        return {
            "best_cost_history": [(int(k), float(c)) for k, c in self.best_cost_history],
            "best_params": [float(v) for v in self.best_params],
            "final_cost": float(self.final_cost),
            "evaluations": int(self.evaluations),
            "mode": self.mode,
        }


def _check_bounds(bounds: Sequence[Tuple[float, float]]) -> Tuple[np.ndarray, np.ndarray]:
    box = np.asarray(bounds, dtype=float)
    if box.ndim != 2 or box.shape[1] != 2 or box.shape[0] == 0:
        raise ConfigError("bounds must be a non-empty list of (lo, hi) pairs")
    lo, hi = box[:, 0], box[:, 1]
    if not (np.all(np.isfinite(box)) and np.all(lo <= hi)):
        raise ConfigError("bounds must be finite with lo ≤ hi")
    return lo, hi


def reflect(x: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Fold coordinates back into [lo, hi] by mirror reflection at the faces."""
    width = hi - lo
    period = np.where(width > 0, 2.0 * width, 1.0)
    y = np.mod(x - lo, period)
    y = np.where(y > width, period - y, y)
    return np.where(width > 0, np.clip(lo + y, lo, hi), lo)


def _evaluate(cost_fn: CostFn, batch: np.ndarray, pool: Optional[ThreadPoolExecutor]) -> np.ndarray:
    if pool is None:
        values = [cost_fn(x) for x in batch]
    else:
        values = list(pool.map(cost_fn, batch))
    out = np.asarray(values, dtype=float)
    return np.where(np.isfinite(out), out, np.inf)


def optimize(
    cost_fn: CostFn,
    bounds: Sequence[Tuple[float, float]],
    config: Optional[DEConfig] = None,
    initial: Optional[Sequence[np.ndarray]] = None,
    repair: Optional[RepairFn] = None,
) -> OptimizationTrace:
    """
    Minimize cost_fn over a box with self-adaptive DE/rand/1/bin.

    Every member carries its own F and CR, resampled with probabilities tau_F and
    tau_CR before producing a trial. Trials of one generation are all evaluated
    before selection, so the outcome depends only on the seed, also with workers.

    Args:
        cost_fn: Objective on vectors inside the box; non-finite values count as +inf
        bounds: Per-coordinate (lo, hi)
        config: DE settings, defaults from app.config
        initial: Vectors that replace the first random members
        repair: Map applied to every candidate before evaluation; must stay in the box

    Returns:
        OptimizationTrace with the best vector and the history of improvements

    Raises:
        ConfigError: on invalid settings or bounds
    """
    config = (config or DEConfig()).validate()
    lo, hi = _check_bounds(bounds)
    dim = lo.size
    NP = config.population_size
    rng = np.random.default_rng(config.seed)

    population = lo + rng.random((NP, dim)) * (hi - lo)
    for k, member in enumerate(list(initial or [])[:NP]):
        vec = np.asarray(member, dtype=float).ravel()
        if vec.size != dim:
            raise ConfigError(f"initial member has {vec.size} coordinates, expected {dim}")
        population[k] = np.clip(vec, lo, hi)
    if repair is not None:
        population = np.array([repair(x) for x in population])
    F = np.full(NP, config.F_init)
    CR = np.full(NP, config.CR_init)

    pool = ThreadPoolExecutor(max_workers=config.workers) if config.workers > 1 else None
    try:
        costs = _evaluate(cost_fn, population, pool)
        evaluations = NP
        best = int(np.argmin(costs))
        best_cost = float(costs[best])
        best_params = population[best].copy()
        history = [(evaluations, best_cost)]

        while evaluations < config.max_evaluations:
            batch = min(NP, config.max_evaluations - evaluations)
            new_F = np.where(rng.random(NP) < config.tau_F, config.F_lower + rng.random(NP) * config.F_upper, F)
            new_CR = np.where(rng.random(NP) < config.tau_CR, rng.random(NP), CR)
            trials = np.empty((batch, dim))
            for i in range(batch):
                candidates = np.delete(np.arange(NP), i)
                r1, r2, r3 = rng.choice(candidates, size=3, replace=False)
                mutant = population[r1] + new_F[i] * (population[r2] - population[r3])
                cross = rng.random(dim) < new_CR[i]
                cross[rng.integers(dim)] = True
                trial = reflect(np.where(cross, mutant, population[i]), lo, hi)
                trials[i] = repair(trial) if repair is not None else trial
            trial_costs = _evaluate(cost_fn, trials, pool)

            for i in range(batch):
                evaluations += 1
                if trial_costs[i] <= costs[i]:
                    population[i] = trials[i]
                    costs[i] = trial_costs[i]
                    F[i], CR[i] = new_F[i], new_CR[i]
                    if costs[i] < best_cost:
                        best_cost = float(costs[i])
                        best_params = population[i].copy()
                        history.append((evaluations, best_cost))
    finally:
        if pool is not None:
            pool.shutdown()

    logger.info("✅ DE finished after %d evaluations: best cost %.12g (%s)", evaluations, best_cost, config.mode)
    return OptimizationTrace(
        best_cost_history=history,
        best_params=best_params,
        final_cost=best_cost,
        evaluations=evaluations,
        mode=config.mode,
    )


def mesh_objective(
    M: float,
    q: float,
    n: int,
    rule: Optional[TriangleRule] = None,
    floor_penalty: float = FLOOR_PENALTY,
) -> CostFn:
    """Resistance of the hull built from a flat parameter vector, plus the range penalty."""
    rule = rule or triangle_rule()
    floor = -rim_sag(n, q)

    def objective(x: np.ndarray) -> float:
        mesh = build_hull(ParamVector.from_flat(x), n, M, q)
        value = cost(mesh, q, rule)
        if floor_penalty > 0 and q > 0:
            low, _ = mesh.height_range(q)
            value += floor_penalty * max(0.0, floor - low - _FLOOR_SLACK)
        return value

    return objective


def _radial_start(M: float, q: float, m: int) -> Optional[np.ndarray]:
    try:
        solution = solve_radial(RadialProblem(R=1.0, M=M, q=q))
    except PreconditionError as e:
        logger.warning("⚠️ No radial seed for M=%g q=%g: %s", M, q, e)
        return None
    return radial_seed(solution, m).to_flat()


def solve_2d(
    M: float,
    q: float,
    m: int = LIFTED_POINTS,
    n: int = BOUNDARY_POINTS,
    config: Optional[DEConfig] = None,
    rule: Optional[TriangleRule] = None,
    seed_radial: bool = False,
    floor_penalty: float = FLOOR_PENALTY,
) -> Tuple[SurfaceMesh, OptimizationTrace]:
    """
    Search m lifted points for the q-concave profile of least resistance on Ω_n.

    Args:
        M: Height bound
        q: Concavity parameter
        m: Number of lifted points (decision vector has 3m coordinates)
        n: Number of boundary samples
        config: DE settings
        rule: Triangle quadrature rule
        seed_radial: Start one member from the radial optimum on the unit disk
        floor_penalty: Weight of the penalty on heights below the rim-sag floor

    Returns:
        The best mesh and the optimization trace

    Raises:
        PreconditionError: on M ≤ 0, q < 0, m < 1 or n < 3
    """
    if not M > 0:
        raise PreconditionError(f"height bound must satisfy M > 0 (got M={M})")
    if q < 0:
        raise PreconditionError(f"concavity parameter must satisfy q ≥ 0 (got q={q})")
    if m < 1:
        raise PreconditionError(f"need at least one lifted point (got m={m})")
    if n < 3:
        raise PreconditionError(f"need at least three boundary samples (got n={n})")
    if q > 1:
        logger.warning("⚠️ q=%g > 1: single-shock condition q·diam ≤ 2 fails on the unit disk", q)
    config = (config or DEConfig()).validate()
    rule = rule or triangle_rule()

    initial = None
    if seed_radial:
        start = _radial_start(M, q, m)
        initial = [start] if start is not None else None

    objective = mesh_objective(M, q, n, rule, floor_penalty)
    logger.info("Optimizing %d lifted points on a %d-gon (M=%g, q=%g, %d evaluations)", m, n, M, q, config.max_evaluations)
    trace = optimize(objective, ParamVector.bounds(m), config, initial=initial)
    mesh = build_hull(ParamVector.from_flat(trace.best_params), n, M, q)
    if not math.isfinite(trace.final_cost):
        logger.error("❌ No finite cost found for M=%g q=%g", M, q)
    return mesh, trace


@dataclass
class SweepEntry:
    M: float
    mesh: SurfaceMesh
    trace: OptimizationTrace
    cost: float


def sweep_2d(
    heights: Sequence[float] = SWEEP_HEIGHTS,
    q: float = SWEEP_CURVATURE,
    m: int = LIFTED_POINTS,
    n: int = BOUNDARY_POINTS,
    config: Optional[DEConfig] = None,
    rule: Optional[TriangleRule] = None,
    seed_radial: bool = False,
    floor_penalty: float = FLOOR_PENALTY,
) -> List[SweepEntry]:
    """
    Optimal hull profiles for several height bounds at one curvature.

    Every run uses the same DE settings and seed, so entries differ only in M.

    Raises:
        ConfigError: on an empty list of heights
        PreconditionError: propagated from solve_2d
    """
    if len(heights) == 0:
        raise ConfigError("need at least one height bound")
    if min(heights) <= 0:
        raise PreconditionError(f"height bounds must be positive, got {list(heights)}")
    rule = rule or triangle_rule()
    entries = []
    for M in heights:
        mesh, trace = solve_2d(float(M), q, m, n, config, rule, seed_radial, floor_penalty)
        entries.append(SweepEntry(M=float(M), mesh=mesh, trace=trace, cost=cost(mesh, q, rule)))
        logger.info("✅ Sweep point M=%g q=%g: cost %.12g", M, q, entries[-1].cost)
    return entries
