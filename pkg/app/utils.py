"""
General Utilities Module
Contains result persistence (JSON, CSV, OBJ) and logging setup.
"""

from typing import Any, Dict, Optional, Sequence
import json
import logging
import os

import numpy as np
import pandas as pd

from app.errors import ConfigError
from app.models import MeshRecord

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def setup_logging(verbose: bool = False) -> None:
    """Send INFO diagnostics to stderr with -v; otherwise only warnings reach stderr."""
    if verbose:
        logging.basicConfig(level=logging.INFO, format=LOG_FORMAT, force=True)


def load_record(data_file: str) -> Dict[str, Any]:
    """
    Load a result record from a JSON file.

    Args:
        data_file: Path to JSON data file

    Returns:
        Dict containing the record

    Raises:
        ConfigError: if the file is missing or not a JSON object
    """
    if not os.path.exists(data_file):
        raise ConfigError(f"file not found: {data_file}")
    try:
        with open(data_file, "r", encoding="utf-8") as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        logger.error("❌ Error loading data file %s: %s", data_file, e)
        raise ConfigError(f"cannot read {data_file}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{data_file} does not hold a JSON object")
    return data


def save_record(data: Dict[str, Any], data_file: str) -> None:
    """
    Save a result record to a JSON file (UTF-8, indent 2, insertion key order).

    Args:
        data: Record dictionary
        data_file: Path to JSON data file
    """
    _ensure_parent(data_file)
    with open(data_file, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
        f.write("\n")
    logger.info("✅ Wrote %s", data_file)


def _ensure_parent(path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def save_columns(columns: Dict[str, Sequence[float]], data_file: str) -> None:
    """Write named columns as CSV with a header row and LF line endings."""
    _ensure_parent(data_file)
    pd.DataFrame(columns).to_csv(data_file, index=False, lineterminator="\n")
    logger.info("✅ Wrote %s", data_file)


def load_columns(data_file: str, required: Sequence[str] = ()) -> pd.DataFrame:
    """
    Read a CSV of finite numeric columns.

    Raises:
        ConfigError: on a missing file, unparsable content, missing columns or non-finite values
    """
    if not os.path.exists(data_file):
        raise ConfigError(f"file not found: {data_file}")
    try:
        frame = pd.read_csv(data_file)
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot parse {data_file}: {e}") from e
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise ConfigError(f"{data_file} lacks column(s) {', '.join(missing)}")
    try:
        frame = frame.astype(float)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{data_file} holds non-numeric values: {e}") from e
    if frame.empty or not np.all(np.isfinite(frame.to_numpy())):
        raise ConfigError(f"{data_file} is empty or holds non-finite values")
    return frame


def save_trace_csv(history: Sequence[tuple], data_file: str) -> None:
    counts, costs = zip(*history) if history else ((), ())
    save_columns({"evaluation_count": list(counts), "best_cost": list(costs)}, data_file)


def mesh_record(mesh, q: float, M: float, cost_value: float, m: Optional[int] = None) -> MeshRecord:
    """Mesh with physical heights; m defaults to the number of hull vertices off the rim."""
    heights = mesh.heights(q)
    vertices = np.column_stack((mesh.vertices[:, :2], heights))
    return {
        "vertices": vertices.tolist(),
        "faces": mesh.faces.tolist(),
        "cost": float(cost_value),
        "M": float(M),
        "q": float(q),
        "m": int(mesh.vertices.shape[0] - mesh.n if m is None else m),
        "n": int(mesh.n),
    }


def save_obj(record: MeshRecord, data_file: str) -> None:
    """Wavefront OBJ: `v x y z` lines with the physical height, then 1-based `f i j k`."""
    _ensure_parent(data_file)
    with open(data_file, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"# M={record['M']!r} q={record['q']!r} cost={record['cost']!r}\n")
        for x, y, z in record["vertices"]:
            f.write(f"v {x!r} {y!r} {z!r}\n")
        for i, j, k in record["faces"]:
            f.write(f"f {i + 1} {j + 1} {k + 1}\n")
    logger.info("✅ Wrote %s", data_file)


def load_obj(data_file: str) -> tuple[np.ndarray, np.ndarray]:
    """Vertices and 0-based faces of an OBJ file written by save_obj."""
    if not os.path.exists(data_file):
        raise ConfigError(f"file not found: {data_file}")
    vertices, faces = [], []
    with open(data_file, "r", encoding="utf-8") as f:
        for line in f:
            parts = line.split()
            try:
                if parts and parts[0] == "v":
                    vertices.append([float(p) for p in parts[1:4]])
                elif parts and parts[0] == "f":
                    faces.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
            except ValueError as e:
                raise ConfigError(f"malformed line in {data_file}: {line.strip()}") from e
    return np.asarray(vertices, dtype=float), np.asarray(faces, dtype=int)
