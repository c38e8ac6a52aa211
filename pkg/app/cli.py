"""
Command-Line Components Module
Contains the argument parser and the formatting of printed results.
"""

from argparse import ArgumentParser, ArgumentTypeError
from typing import Dict, Iterable, List, Tuple

from app.config import SIG_DIGITS

CHECKS = ("qconcave", "shock", "resistance", "oracle")


def fmt(value: float) -> str:
    """Number with the fixed count of significant digits used for all printed results."""
    return f"{value:.{SIG_DIGITS}g}"


def render_results(rows: Iterable[Tuple[str, float]]) -> str:
    pairs = list(rows)
    width = max(len(name) for name, _ in pairs)
    return "\n".join(f"{name.ljust(width)} = {fmt(value)}" for name, value in pairs)


def render_check(name: str, passed: bool, detail: str = "") -> str:
    marker = "✅" if passed else "❌"
    status = "pass" if passed else "FAIL"
    return f"{marker} {name}: {status}" + (f" ({detail})" if detail else "")


def parse_checks(value: str) -> List[str]:
    checks = [c.strip() for c in value.split(",") if c.strip()]
    unknown = [c for c in checks if c not in CHECKS]
    if not checks or unknown:
        raise ArgumentTypeError(f"checks must be a comma-separated subset of {', '.join(CHECKS)}")
    return checks


def parse_floats(value: str) -> List[float]:
    try:
        values = [float(v) for v in value.split(",") if v.strip()]
    except ValueError as e:
        raise ArgumentTypeError(f"expected comma-separated numbers, got {value!r}") from e
    if not values:
        raise ArgumentTypeError("expected at least one number")
    return values


def _add_common(sub: ArgumentParser) -> None:
    sub.add_argument("-v", "--verbose", action="store_true", default=None, help="log progress to stderr")
    sub.add_argument("--config", metavar="FILE", help="TOML or JSON file with defaults for the flags")


def create_parser() -> Tuple[ArgumentParser, Dict[str, ArgumentParser]]:
    """Top-level parser and its subcommand parsers, keyed by command name."""
    parser = ArgumentParser(
        prog="newtres",
        description="Minimal-resistance profiles under q-concavity constraints",
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    commands: Dict[str, ArgumentParser] = {}

    sub = subparsers.add_parser("solve-1d", help="closed-form 1D minimizer on [-1, 1]")
    _add_common(sub)
    sub.add_argument("--M", type=float, help="height bound")
    sub.add_argument("--q", type=float, help="concavity parameter, 0 ≤ q ≤ 1")
    sub.add_argument("--samples", type=int, help="number of profile samples in the CSV")
    sub.add_argument("--out", metavar="PREFIX", help="write PREFIX.csv and PREFIX.json")
    commands["solve-1d"] = sub

    sub = subparsers.add_parser("solve-radial", help="radial minimizer on a disk of radius R")
    _add_common(sub)
    sub.add_argument("--R", type=float, help="disk radius (default 1)")
    sub.add_argument("--M", type=float, help="height bound")
    sub.add_argument("--q", type=float, help="concavity parameter, 0 ≤ qR ≤ 1")
    sub.add_argument("--samples", type=int, help="number of radial samples")
    sub.add_argument("--out", metavar="PREFIX", help="write PREFIX.csv and PREFIX.json")
    commands["solve-radial"] = sub

    sub = subparsers.add_parser("solve-2d", help="differential evolution over convex-hull profiles")
    _add_common(sub)
    sub.add_argument("--M", type=float, help="height bound")
    sub.add_argument("--q", type=float, help="concavity parameter")
    sub.add_argument("--m", type=int, help="number of lifted points")
    sub.add_argument("--n", type=int, help="number of boundary samples")
    sub.add_argument("--evals", type=int, help="evaluation budget")
    sub.add_argument("--seed", type=int, help="random seed (default NEWTRES_SEED or 0)")
    sub.add_argument("--pop", type=int, help="population size")
    sub.add_argument("--workers", type=int, help="threads evaluating the population")
    sub.add_argument("--seed-radial", action="store_true", default=None, help="start one member from the radial optimum")
    sub.add_argument("--floor-penalty", type=float, help="weight of the penalty on heights below the rim floor")
    sub.add_argument("--M-list", type=parse_floats, help="comma-separated height bounds to sweep at one q, e.g. 0.3,0.5,0.7,1")
    sub.add_argument("--out-mesh", metavar="FILE", help="write the best mesh as OBJ, with a JSON record next to it")
    sub.add_argument("--out-trace", metavar="FILE", help="write the best-cost history as CSV")
    sub.add_argument("--out-sweep", metavar="FILE", help="write one CSV row per swept height bound")
    commands["solve-2d"] = sub

    sub = subparsers.add_parser("verify", help="check an exported profile")
    _add_common(sub)
    sub.add_argument("file", help="profile CSV (x,u or r,u); a JSON summary with the same prefix is used if present")
    sub.add_argument("--q", type=float, help="concavity parameter (default from the JSON summary)")
    sub.add_argument("--check", type=parse_checks, help="comma-separated checks: qconcave,shock,resistance,oracle")
    sub.add_argument("--domain", choices=("interval", "disk"), help="domain of the profile (default from the columns)")
    sub.add_argument("--R", type=float, help="disk radius (default: largest sampled r)")
    sub.add_argument("--rays", type=int, help="Monte Carlo points for the shock check")
    sub.add_argument("--seed", type=int, help="random seed for the shock check and the oracle")
    sub.add_argument("--resistance-tol", type=float, help="tolerance of the resistance round trip")
    sub.add_argument("--oracle-nodes", type=int, help="grid intervals of the discrete oracle")
    sub.add_argument("--oracle-evals", type=int, help="evaluation budget of the discrete oracle")
    sub.add_argument("--oracle-out", metavar="FILE", help="write the oracle profile as CSV")
    sub.add_argument("--report", metavar="FILE", help="write the check results as JSON")
    commands["verify"] = sub

    return parser, commands
