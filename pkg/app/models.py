"""Type definitions for serialized records."""
from typing import List, Tuple, TypedDict


class Profile1DRecord(TypedDict):
    M: float
    q: float
    gamma_star: float
    resistance: float


class RadialRecord(TypedDict):
    R: float
    M: float
    q: float
    a_M: float
    a_star: float
    eta_star: float
    resistance: float


class MeshRecord(TypedDict):
    vertices: List[List[float]]
    faces: List[List[int]]
    cost: float
    M: float
    q: float
    m: int
    n: int


class ShockViolation(TypedDict):
    x: List[float]
    tau: float
    deficit: float


class ShockReportRecord(TypedDict):
    tested_points: int
    violations: List[ShockViolation]
    passed: bool


class TraceRecord(TypedDict):
    best_cost_history: List[Tuple[int, float]]
    best_params: List[float]
    final_cost: float
    evaluations: int
    mode: str


class Solve2DRecord(MeshRecord):
    objective: float
    trace: TraceRecord


class OracleRecord(TypedDict):
    resistance: float
    intervals: int
    evaluations: int


class ResistanceCheckRecord(TypedDict):
    value: float
    stored: float
    sample_error: float
    passed: bool


class OracleCheckRecord(OracleRecord):
    stored: float
    passed: bool


class VerifyReportRecord(TypedDict, total=False):
    file: str
    domain: str
    q: float
    qconcave: bool
    shock: ShockReportRecord
    resistance: ResistanceCheckRecord
    oracle: OracleCheckRecord
    passed: bool
