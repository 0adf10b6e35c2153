from typing import Dict, List, Optional

from fastapi import APIRouter, Depends, HTTPException
from pydantic import BaseModel
from sqlalchemy.orm import Session

from constants import SNP_DEFAULT_HORIZON, SNP_FIXTURES_DIR, SNP_SWEEP_WORKERS
from database.database import get_check, get_db, list_checks, list_sweeps, record_sweep
from snp.fixtures import available_fixtures, run_sweep

router = APIRouter()


class SweepRequest(BaseModel):
    parameter: str = "d"
    start: int = 1
    stop: int = 5
    fixed: Dict[str, int] = {}
    horizon: Optional[int] = None
    record: bool = True


@router.get("/runs")
def get_check_runs(accepted: Optional[bool] = None, db: Session = Depends(get_db)):
    return [run.to_dict() for run in list_checks(db, accepted)]


@router.get("/runs/{run_id}")
def get_check_run(run_id: str, db: Session = Depends(get_db)):
    run = get_check(db, run_id)
    if not run:
        raise HTTPException(status_code=404, detail="Run not found")
    return run.to_dict()


@router.get("/sweeps")
def get_sweep_runs(fixture: Optional[str] = None, db: Session = Depends(get_db)):
    return [run.to_dict() for run in list_sweeps(db, fixture)]


@router.post("/sweeps/{fixture}")
def sweep_fixture(fixture: str, request: SweepRequest, db: Session = Depends(get_db)):
    if fixture not in available_fixtures(SNP_FIXTURES_DIR):
        raise HTTPException(status_code=404, detail=f"Fixture {fixture} not found")
    if request.stop < request.start:
        raise HTTPException(status_code=400, detail="stop must not be below start")
    outcomes = run_sweep(fixture, request.parameter, range(request.start, request.stop + 1),
                         horizon=request.horizon if request.horizon is not None else SNP_DEFAULT_HORIZON,
                         workers=SNP_SWEEP_WORKERS, fixed=request.fixed, directory=SNP_FIXTURES_DIR)
    results: List[Dict] = []
    for outcome in outcomes:
        entry = outcome.model_dump()
        if request.record:
            entry["run_id"] = record_sweep(db, outcome).id
        results.append(entry)
    return {"fixture": fixture, "parameter": request.parameter, "results": results}
