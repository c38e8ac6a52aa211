"""Command handlers."""

import functools
import logging
import math
import os
import sys
from argparse import ArgumentParser, ArgumentTypeError, Namespace
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np

from app.cli import fmt, parse_checks, parse_floats, render_check, render_results
from app.config import (
    BOUNDARY_POINTS,
    FLOOR_PENALTY,
    LIFTED_POINTS,
    PROFILE_SAMPLES,
    RADIAL_SAMPLES,
    SHOCK_RAYS,
    RunConfig,
    load_config_file,
)
from app.errors import ConfigError, DomainError, NewtresError, PreconditionError
from app.hull2d import SurfaceMesh, cost, inscribed_radius, rim_sag
from app.models import Solve2DRecord, VerifyReportRecord
from app.optimize import DEConfig, OptimizationTrace, solve_2d, sweep_2d
from app.profile1d import Profile1D, eval_phi, resistance_1d, solve_1d
from app.radial import RadialProblem, RadialSolution, resistance_radial, solve_radial, zeta_q
from app.utils import load_columns, load_record, mesh_record, save_columns, save_obj, save_record, save_trace_csv
from app.verify import (
    Disk,
    Interval,
    OracleResult,
    check_qconcave,
    check_qconcave_radial,
    check_single_shock,
    lower_bound,
    oracle_discrete_1d,
    oracle_discrete_radial,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2

BOUND_SLACK = 1e-9
RANGE_SLACK = 1e-9
RESISTANCE_TOL = 1e-6
SAMPLE_TOL = 1e-8
SHOWN_VIOLATIONS = 5

_NOT_OPTIONS = {"command", "config", "handler", "verbose"}

Handler = Callable[[RunConfig], int]


def build_run_config(args: Namespace) -> RunConfig:
    """Merge config-file defaults with the flags given on the command line (flags win)."""
    flags = {k: v for k, v in vars(args).items() if k not in _NOT_OPTIONS}
    params: Dict[str, Any] = {}
    if args.config:
        file_params = load_config_file(args.config)
        unknown = sorted(set(file_params) - set(flags))
        if unknown:
            raise ConfigError(f"unknown option(s) in {args.config}: {', '.join(unknown)}")
        params.update(file_params)
    params.update({k: v for k, v in flags.items() if v is not None})
    return RunConfig(command=args.command, params=params, source=args.config)


def _require(run: RunConfig, key: str) -> Any:
    value = run.get(key)
    if value is None:
        raise ConfigError(f"--{key} is required for {run.command}")
    return value


def guarded(handler: Handler) -> Callable[[Namespace], int]:
    """Run a handler and map package errors onto exit codes."""

    @functools.wraps(handler)
    def run(args: Namespace) -> int:
        try:
            return handler(build_run_config(args))
        except (ConfigError, DomainError) as e:
            print(f"❌ {e}", file=sys.stderr)
            return EXIT_USAGE
        except NewtresError as e:
            logger.debug("%s failed", args.command, exc_info=True)
            print(f"❌ {e}", file=sys.stderr)
            return EXIT_FAILED

    return run


def _bound_check(resistance: float, bound: float) -> bool:
    passed = resistance >= bound - BOUND_SLACK
    print(render_check("lower bound", passed, f"{fmt(resistance)} ≥ {fmt(bound)}"))
    return passed


@guarded
def cmd_solve_1d(run: RunConfig) -> int:
    M = float(_require(run, "M"))
    q = float(_require(run, "q"))
    samples = int(run.get("samples", PROFILE_SAMPLES))
    profile = solve_1d(M, q)
    bound = lower_bound(Interval(), M)
    rows = [("gamma_star", profile.gamma_star), ("resistance", profile.resistance), ("lower_bound", bound)]
    if profile.gamma_star > 0:
        rows.append(("phi_residual", eval_phi(profile.gamma_star, M, q)))
    print(render_results(rows))

    out = run.get("out")
    if out:
        x = profile.grid(samples)
        save_columns({"x": x, "u": profile(x)}, f"{out}.csv")
        record: Dict[str, Any] = dict(profile.to_record())
        record.update(lower_bound=bound, samples=int(x.size))
        save_record(record, f"{out}.json")
    return EXIT_OK if _bound_check(profile.resistance, bound) else EXIT_FAILED


@guarded
def cmd_solve_radial(run: RunConfig) -> int:
    R = float(run.get("R", 1.0))
    M = float(_require(run, "M"))
    q = float(_require(run, "q"))
    samples = int(run.get("samples", RADIAL_SAMPLES))
    solution = solve_radial(RadialProblem(R=R, M=M, q=q), n_samples=samples)
    resistance = solution.resistance
    total = 2.0 * math.pi * resistance
    bound = lower_bound(Disk(R), M)

    tail = solution.r[solution.r > solution.a_star]
    slope = solution.derivative(tail)
    el_residual = float(np.max(np.abs(-tail * slope / (1.0 + slope**2) ** 2 - solution.eta_star)))
    rows = [
        ("a_M", solution.a_M),
        ("a_star", solution.a_star),
        ("eta_star", solution.eta_star),
        ("resistance", resistance),
        ("total_resistance", total),
        ("lower_bound", bound),
        ("el_residual", el_residual),
        ("u_at_R", float(solution.u[-1])),
    ]
    if q > 0:
        rows.append(("zeta_residual", zeta_q(solution.a_star, R, q) - M))
    print(render_results(rows))

    out = run.get("out")
    if out:
        save_columns({"r": solution.r, "u": solution.u}, f"{out}.csv")
        record: Dict[str, Any] = dict(solution.to_record())
        record.update(lower_bound=bound, samples=int(solution.r.size))
        save_record(record, f"{out}.json")
    return EXIT_OK if _bound_check(total, bound) else EXIT_FAILED


def _radial_reference(M: float, q: float) -> Optional[float]:
    try:
        return 2.0 * math.pi * solve_radial(RadialProblem(R=1.0, M=M, q=q)).resistance
    except PreconditionError as e:
        logger.info("No radial reference: %s", e)
        return None


def _with_height(path: str, M: float) -> str:
    stem, ext = os.path.splitext(path)
    return f"{stem}_M{M:g}{ext}"


def _report_2d(M: float, q: float, n: int, mesh: SurfaceMesh, trace: OptimizationTrace, bare: float) -> Dict[str, float]:
    """Print the result block of one 2D run; returns the printed values."""
    low, high = mesh.height_range(q)
    bound = lower_bound(Disk(inscribed_radius(n)), max(high, M) - min(low, 0.0))
    values = {
        "cost": bare,
        "objective": trace.final_cost,
        "evaluations": trace.evaluations,
        "min_height": low,
        "max_height": high,
        "lower_bound": bound,
    }
    radial = _radial_reference(M, q)
    if radial is not None:
        values["radial_resistance"] = radial
    print(render_results(values.items()))
    if not (high <= M + RANGE_SLACK and low >= -rim_sag(n, q) - RANGE_SLACK):
        print(f"⚠️ heights [{fmt(low)}, {fmt(high)}] leave the admissible range")
    return values


def _save_2d(
    run: RunConfig,
    mesh: SurfaceMesh,
    trace: OptimizationTrace,
    M: float,
    q: float,
    m: int,
    bare: float,
    tag: Optional[float] = None,
) -> None:
    out_mesh, out_trace = run.get("out_mesh"), run.get("out_trace")
    if out_mesh:
        out_mesh = out_mesh if tag is None else _with_height(out_mesh, tag)
        mesh_data = mesh_record(mesh, q, M, bare, m)
        save_obj(mesh_data, out_mesh)
        record: Solve2DRecord = {**mesh_data, "objective": float(trace.final_cost), "trace": trace.to_record()}
        save_record(dict(record), f"{os.path.splitext(out_mesh)[0]}.json")
    if out_trace:
        out_trace = out_trace if tag is None else _with_height(out_trace, tag)
        save_trace_csv(trace.best_cost_history, out_trace)


def _heights(run: RunConfig) -> Optional[List[float]]:
    value = run.get("M_list")
    if value is None:
        return None
    if isinstance(value, str):
        try:
            return parse_floats(value)
        except ArgumentTypeError as e:
            raise ConfigError(str(e)) from e
    return [float(v) for v in value]


@guarded
def cmd_solve_2d(run: RunConfig) -> int:
    q = float(_require(run, "q"))
    heights = _heights(run)
    M = None if heights else float(_require(run, "M"))
    m = int(run.get("m", LIFTED_POINTS))
    n = int(run.get("n", BOUNDARY_POINTS))
    config = DEConfig.from_mapping(
        {
            "max_evaluations": run.get("evals"),
            "population_size": run.get("pop"),
            "seed": run.get("seed"),
            "workers": run.get("workers"),
        }
    )
    seed_radial = bool(run.get("seed_radial", False))
    floor_penalty = float(run.get("floor_penalty", FLOOR_PENALTY))

    if M is not None:
        mesh, trace = solve_2d(M, q, m, n, config, seed_radial=seed_radial, floor_penalty=floor_penalty)
        bare = cost(mesh, q)
        values = _report_2d(M, q, n, mesh, trace, bare)
        _save_2d(run, mesh, trace, M, q, m, bare)
        return EXIT_OK if _bound_check(bare, values["lower_bound"]) else EXIT_FAILED

    entries = sweep_2d(heights, q, m, n, config, seed_radial=seed_radial, floor_penalty=floor_penalty)
    rows: Dict[str, List[float]] = {k: [] for k in ("M", "cost", "objective", "radial_resistance", "lower_bound")}
    passed = []
    for entry in entries:
        print(f"📐 M = {fmt(entry.M)}")
        values = _report_2d(entry.M, q, n, entry.mesh, entry.trace, entry.cost)
        _save_2d(run, entry.mesh, entry.trace, entry.M, q, m, entry.cost, tag=entry.M)
        for key in rows:
            rows[key].append(entry.M if key == "M" else float(values.get(key, math.nan)))
        passed.append(_bound_check(entry.cost, values["lower_bound"]))
    if run.get("out_sweep"):
        save_columns(rows, run.get("out_sweep"))
    return EXIT_OK if all(passed) else EXIT_FAILED


def _checks(run: RunConfig) -> List[str]:
    value = run.get("check", ["qconcave", "shock"])
    if isinstance(value, str):
        try:
            return parse_checks(value)
        except ArgumentTypeError as e:
            raise ConfigError(str(e)) from e
    return list(value)


def _interval_profile(record: Optional[Dict[str, Any]]) -> Optional[Profile1D]:
    if record is None or "gamma_star" not in record:
        return None
    return Profile1D(M=float(record["M"]), q=float(record["q"]), gamma_star=float(record["gamma_star"]))


def _disk_profile(rs: np.ndarray, us: np.ndarray, record: Optional[Dict[str, Any]]) -> Optional[RadialSolution]:
    if record is None or "a_star" not in record:
        return None
    return RadialSolution(
        R=float(record["R"]),
        M=float(record["M"]),
        q=float(record["q"]),
        a_M=float(record.get("a_M", record["a_star"])),
        a_star=float(record["a_star"]),
        eta_star=float(record["eta_star"]),
        r=rs,
        u=us,
    )


def _interval_fields(xs: np.ndarray, us: np.ndarray, profile: Optional[Profile1D]):
    if profile is not None:
        return (lambda X: profile(X[:, 0])), (lambda X: profile.derivative(X[:, 0]))
    return (lambda X: np.interp(X[:, 0], xs, us)), None


def _disk_fields(rs: np.ndarray, us: np.ndarray, solution: Optional[RadialSolution]):
    if solution is not None:

        def grad(X: np.ndarray) -> np.ndarray:
            radius = np.hypot(X[:, 0], X[:, 1])
            scale = np.asarray(solution.derivative(radius)) / np.where(radius > 0, radius, 1.0)
            return scale[:, None] * X

        return (lambda X: solution.height(np.hypot(X[:, 0], X[:, 1]))), grad
    return (lambda X: np.interp(np.hypot(X[:, 0], X[:, 1]), rs, us)), None


def _sampled_resistance(kind: str, coords: np.ndarray, us: np.ndarray, profile) -> Tuple[float, float]:
    """
    Resistance of the exported samples and their largest deviation from the stored optimum.

    With a stored optimum the integral uses its analytic derivative; otherwise the
    samples are read as piecewise linear and the deviation is 0.
    """
    integrate_samples = resistance_1d if kind == "interval" else resistance_radial
    if profile is None:
        return integrate_samples(coords, us), 0.0
    exact = profile(coords) if kind == "interval" else profile.height(coords)
    error = float(np.max(np.abs(np.asarray(exact) - us)))
    return integrate_samples(coords, us, derivative=profile.derivative), error


def _run_oracle(run: RunConfig, kind: str, record: Dict[str, Any], q: float) -> OracleResult:
    options: Dict[str, Any] = {"seed": run.get("seed")}
    if run.get("oracle_nodes") is not None:
        options["N"] = int(run.get("oracle_nodes"))
    if run.get("oracle_evals") is not None:
        options["budget"] = int(run.get("oracle_evals"))
    if kind == "interval":
        return oracle_discrete_1d(float(record["M"]), q, **options)
    return oracle_discrete_radial(float(record["R"]), float(record["M"]), q, **options)


@guarded
def cmd_verify(run: RunConfig) -> int:
    path = str(_require(run, "file"))
    prefix, ext = os.path.splitext(path)
    csv_path = path if ext.lower() == ".csv" else f"{prefix}.csv"
    json_path = f"{prefix}.json"
    record = load_record(json_path) if os.path.exists(json_path) else None
    frame = load_columns(csv_path, required=("u",))
    if "x" in frame.columns:
        kind, coord = "interval", "x"
    elif "r" in frame.columns:
        kind, coord = "disk", "r"
    else:
        raise ConfigError(f"{csv_path} needs an x or r column")
    if run.get("domain", kind) != kind:
        raise ConfigError(f"{csv_path} holds a profile on the {kind}, not the {run.get('domain')}")
    coords = frame[coord].to_numpy()
    us = frame["u"].to_numpy()
    q_value = run.get("q", record.get("q") if record else None)
    if q_value is None:
        raise ConfigError("--q is required when no JSON summary is present")
    q = float(q_value)
    checks = _checks(run)
    if ("resistance" in checks or "oracle" in checks) and (record is None or "resistance" not in record):
        raise ConfigError(f"the resistance and oracle checks need {json_path} with a stored resistance")

    if kind == "interval":
        domain = Interval(float(coords[0]), float(coords[-1])) if coords[0] < coords[-1] else Interval()
        profile = _interval_profile(record)
        u_fn, grad_fn = _interval_fields(coords, us, profile)
    else:
        domain = Disk(float(run.get("R", record["R"] if record else coords[-1])))
        profile = _disk_profile(coords, us, record)
        u_fn, grad_fn = _disk_fields(coords, us, profile)

    report: VerifyReportRecord = {"file": csv_path, "domain": kind, "q": q}
    results = []
    if "qconcave" in checks:
        passed = check_qconcave(coords, us, q) if kind == "interval" else check_qconcave_radial(coords, us, q)
        print(render_check("qconcave", passed, f"q={fmt(q)}"))
        report["qconcave"] = passed
        results.append(passed)
    if "shock" in checks:
        shock = check_single_shock(u_fn, grad_fn, domain, samples=int(run.get("rays", SHOCK_RAYS)), seed=run.get("seed"))
        print(render_check("shock", shock.passed, f"{shock.tested_points} points, {len(shock.violations)} violations"))
        for v in shock.violations[:SHOWN_VIOLATIONS]:
            print(f"   x={[fmt(c) for c in v['x']]} tau={fmt(v['tau'])} deficit={fmt(v['deficit'])}")
        report["shock"] = shock.to_record()
        results.append(shock.passed)
    if "resistance" in checks:
        value, sample_error = _sampled_resistance(kind, coords, us, profile)
        stored = float(record["resistance"])
        tol = float(run.get("resistance_tol", RESISTANCE_TOL))
        passed = abs(value - stored) <= tol and sample_error <= SAMPLE_TOL
        detail = f"{fmt(value)} vs stored {fmt(stored)}"
        if sample_error > SAMPLE_TOL:
            detail += f", samples off the stored profile by {fmt(sample_error)}"
        print(render_check("resistance", passed, detail))
        report["resistance"] = {"value": value, "stored": stored, "sample_error": sample_error, "passed": passed}
        results.append(passed)
    if "oracle" in checks:
        oracle = _run_oracle(run, kind, record, q)
        stored = float(record["resistance"])
        passed = stored <= oracle.resistance + BOUND_SLACK
        print(render_check("oracle", passed, f"stored {fmt(stored)} ≤ oracle {fmt(oracle.resistance)}"))
        report["oracle"] = {**oracle.to_record(), "stored": stored, "passed": passed}
        if run.get("oracle_out"):
            save_columns(oracle.to_columns(coord), run.get("oracle_out"))
        results.append(passed)

    report["passed"] = all(results)
    if run.get("report"):
        save_record(dict(report), run.get("report"))
    return EXIT_OK if report["passed"] else EXIT_FAILED


def register_commands(commands: Dict[str, ArgumentParser]) -> None:
    """Attach a handler to every subcommand parser."""
    handlers = {
        "solve-1d": cmd_solve_1d,
        "solve-radial": cmd_solve_radial,
        "solve-2d": cmd_solve_2d,
        "verify": cmd_verify,
    }
    for name, parser in commands.items():
        parser.set_defaults(handler=handlers[name])
