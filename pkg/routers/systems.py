# FastAPI Imports
from fastapi import APIRouter, Depends, HTTPException
from pydantic import BaseModel

from typing import Dict, Optional

# Database Imports
from sqlalchemy.orm import Session
from database.database import get_db, record_check

# SNP Imports
from snp.constructs import classify_constructs
from snp.document import parse_system, render_system
from snp.dot import export_dot
from snp.eliminator import transform
from snp.equivalence import Expectation, compare
from snp.errors import OutOfScopeError, RewriteVerificationError, SNPError, UnclassifiableTopologyError
from snp.matrix_engine import build_transition_matrix, matrix_run
from snp.models import SystemDescription
from snp.simulator import run
from snp.validation import validate_restricted

# Configuration
from constants import SNP_DEFAULT_HORIZON

router = APIRouter(prefix="/systems", tags=["systems"])


class SystemRequest(BaseModel):
    document: str
    parameters: Dict[str, int] = {}
    horizon: Optional[int] = None
    verbose: bool = False


class CheckRequest(BaseModel):
    original: str
    candidate: str
    parameters: Dict[str, int] = {}
    horizon: Optional[int] = None
    expected_offset: Optional[int] = None
    expected_factors: Dict[str, int] = {}


class CheckResponse(BaseModel):
    run_id: str
    accepted: bool
    offset: Optional[int] = None
    offsets: Dict[str, int] = {}
    count_factors: Dict[str, int] = {}
    compared_horizon: int
    report: str


def http_error(exc: SNPError) -> HTTPException:
    """422 for systems the rewrites do not cover, 500 for a rewrite that fails its own check, 400 otherwise."""
    if isinstance(exc, RewriteVerificationError):
        status = 500
    elif isinstance(exc, (OutOfScopeError, UnclassifiableTopologyError)):
        status = 422
    else:
        status = 400
    return HTTPException(status_code=status, detail=str(exc))


def _parse(document: str, parameters: Dict[str, int]) -> SystemDescription:
    try:
        return parse_system(document, parameters)
    except SNPError as exc:
        raise http_error(exc)


def _horizon(requested: Optional[int]) -> Optional[int]:
    return requested if requested is not None else SNP_DEFAULT_HORIZON


@router.post("/simulate")
def simulate_system(request: SystemRequest):
    system = _parse(request.document, request.parameters)
    try:
        result = run(system, _horizon(request.horizon))
    except SNPError as exc:
        raise http_error(exc)
    response = {
        "system": system.name,
        "halted": result.halted,
        "steps": result.trace.steps,
        "lost_spikes": result.trace.lost_spikes,
        "events": [event.record() for event in result.trace.events],
        "sinks": result.sinks.to_dict(),
    }
    if request.verbose:
        response["configurations"] = [c.line() for c in result.trace.configurations]
    return response


@router.post("/validate")
def validate_system(request: SystemRequest):
    system = _parse(request.document, request.parameters)
    return validate_restricted(system).to_dict()


@router.post("/classify")
def classify_system(request: SystemRequest):
    system = _parse(request.document, request.parameters)
    try:
        return classify_constructs(system).to_dict()
    except SNPError as exc:
        raise http_error(exc)


@router.post("/transform")
def transform_system(request: SystemRequest):
    system = _parse(request.document, request.parameters)
    try:
        result = transform(system, _horizon(request.horizon))
    except SNPError as exc:
        raise http_error(exc)
    return {**result.to_dict(), "document": render_system(result.system), "report": result.report()}


@router.post("/matrix")
def matrix_system(request: SystemRequest):
    system = _parse(request.document, request.parameters)
    try:
        matrix = build_transition_matrix(system)
        vectors = matrix_run(system, _horizon(request.horizon))
    except SNPError as exc:
        raise http_error(exc)
    return {
        "rows": [f"{neuron}:{rule}" for neuron, rule in matrix.rows],
        "columns": matrix.columns,
        "matrix": matrix.matrix.tolist(),
        "trace": [vector.tolist() for vector in vectors],
    }


@router.post("/export-dot")
def export_system_dot(request: SystemRequest):
    system = _parse(request.document, request.parameters)
    return {"dot": export_dot(system)}


@router.post("/check", response_model=CheckResponse)
def check_systems(request: CheckRequest, db: Session = Depends(get_db)):
    original = _parse(request.original, request.parameters)
    candidate = _parse(request.candidate, request.parameters)
    expected = None
    if request.expected_offset is not None or request.expected_factors:
        expected = Expectation(offset=request.expected_offset, factors=request.expected_factors)
    try:
        verdict = compare(original, candidate, _horizon(request.horizon), expected)
    except SNPError as exc:
        raise http_error(exc)
    run_record = record_check(db, verdict)
    return CheckResponse(
        run_id=run_record.id,
        accepted=verdict.accepted,
        offset=verdict.offset,
        offsets=verdict.offsets,
        count_factors=verdict.count_factors,
        compared_horizon=verdict.compared_horizon,
        report=verdict.report(),
    )
