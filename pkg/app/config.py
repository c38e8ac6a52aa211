"""Application configuration constants and run-configuration loading."""
import json
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from app.errors import ConfigError

load_dotenv()

logger = logging.getLogger(__name__)

# Numerics
ROOT_TOL = 1e-12
ROOT_MAXITER = 200
MINIMIZE_TOL = 1e-10
INTEGRATE_TOL = 1e-10
INTEGRATE_RTOL = 1e-12
INTEGRATE_LIMIT = 50
Q_ZERO = 1e-12

# Radial chain
RADIAL_SAMPLES = 512
H_INV_MAXITER = 100

# 1D profiles
PROFILE_SAMPLES = 2001

# Discretized 2D problem
BOUNDARY_POINTS = 100
LIFTED_POINTS = 50
QUADRATURE_ORDER = 10
HULL_DEDUP_TOL = 1e-12
UPPER_FACE_TOL = 1e-12
MIN_FACE_AREA = 1e-14
FLOOR_PENALTY = 10.0
SWEEP_CURVATURE = 0.4
SWEEP_HEIGHTS = (0.3, 0.5, 0.7, 1.0)

# Differential evolution
DE_EVALUATIONS = 100_000
DE_POPULATION = 50
DE_F_INIT = 0.5
DE_CR_INIT = 0.9
DE_TAU_F = 0.1
DE_TAU_CR = 0.1
DE_F_LOWER = 0.1
DE_F_UPPER = 0.9

# Verification
SHOCK_RAYS = 10_000
SHOCK_TAU_SAMPLES = 32
SHOCK_TOL = 1e-9
FD_STEP = 1e-6
CONCAVITY_TOL = 1e-9

# Output
SIG_DIGITS = 12


def default_seed() -> int:
    """Seed used when none is given; NEWTRES_SEED overrides it."""
    raw = os.getenv("NEWTRES_SEED")
    if raw is None or not raw.strip():
        return 0
    try:
        return int(raw)
    except ValueError as e:
        raise ConfigError(f"NEWTRES_SEED must be an integer, got {raw!r}") from e


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one command invocation, after file and flag merging."""

    command: str
    params: Dict[str, Any] = field(default_factory=dict)
    source: Optional[str] = None

    def get(self, key: str, default: Any = None) -> Any:
        value = self.params.get(key)
        return default if value is None else value


def load_config_file(path: str) -> Dict[str, Any]:
    """
    Read a TOML or JSON configuration file into a flat mapping.

    Args:
        path: Path to a ``.toml`` or ``.json`` file

    Returns:
        Dict of option names to values

    Raises:
        ConfigError: if the file is missing or cannot be parsed
    """
    file_path = Path(path)
    if not file_path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        if file_path.suffix.lower() == ".json":
            with open(file_path, "r", encoding="utf-8") as f:
                data = json.load(f)
        else:
            with open(file_path, "rb") as f:
                data = tomllib.load(f)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"cannot parse config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a table of options")
    logger.debug("Loaded %d options from %s", len(data), path)
    return {str(k).replace("-", "_"): v for k, v in data.items()}
