import argparse
import logging
import uuid
from datetime import datetime, timedelta
from typing import Dict, List, Optional

import diceware
from sqlalchemy import Boolean, Column, DateTime, Integer, JSON, String, Text, create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker
from sqlalchemy.pool import StaticPool

from constants import SNP_DATABASE_URL, SNP_RUN_ID_WORDS
from snp.equivalence import EquivalenceVerdict
from snp.errors import LedgerError
from snp.fixtures import SweepOutcome

logger = logging.getLogger(__name__)

Base = declarative_base()


class CheckRun(Base):
    __tablename__ = "check_runs"

    id = Column(String, primary_key=True)
    original_name = Column(String, nullable=False)
    candidate_name = Column(String, nullable=False)
    accepted = Column(Boolean, nullable=False)
    offset = Column(Integer, nullable=True)
    offsets = Column(JSON, nullable=False)  # sink -> k
    factors = Column(JSON, nullable=False)  # sink -> count factor
    horizon = Column(Integer, nullable=False)
    report = Column(Text, nullable=False)
    created_at = Column(DateTime, default=datetime.now)

    def to_dict(self) -> Dict:
        return {
            "id": self.id,
            "original": self.original_name,
            "candidate": self.candidate_name,
            "accepted": self.accepted,
            "offset": self.offset,
            "offsets": self.offsets,
            "factors": self.factors,
            "horizon": self.horizon,
            "report": self.report,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }


class SweepRun(Base):
    __tablename__ = "sweep_runs"

    id = Column(String, primary_key=True)
    fixture = Column(String, nullable=False)
    parameters = Column(JSON, nullable=False)
    accepted = Column(Boolean, nullable=False)
    offset = Column(Integer, nullable=True)
    error = Column(Text, nullable=True)
    created_at = Column(DateTime, default=datetime.now)

    def to_dict(self) -> Dict:
        return {
            "id": self.id,
            "fixture": self.fixture,
            "parameters": self.parameters,
            "accepted": self.accepted,
            "offset": self.offset,
            "error": self.error,
            "created_at": self.created_at.isoformat() if self.created_at else None,
        }


def make_engine(url: str = SNP_DATABASE_URL) -> Engine:
    if url.startswith("sqlite"):
        kwargs = {"connect_args": {"check_same_thread": False}}
        if ":memory:" in url or url == "sqlite://":
            kwargs["poolclass"] = StaticPool
        return create_engine(url, **kwargs)
    return create_engine(url)


engine = make_engine()
SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=engine)


def init_db(bind: Optional[Engine] = None) -> None:
    Base.metadata.create_all(bind or engine)


def get_db():
    db = SessionLocal()
    try:
        yield db
    finally:
        db.close()


def generate_run_id() -> str:
    """Memorable run id made of diceware words, uuid4 if diceware is unavailable."""
    try:
        options = argparse.Namespace(
            num=SNP_RUN_ID_WORDS,
            delimiter="-",
            caps=False,
            specials=0,
            randomsource="system",
            wordlist=["en_eff"],
            dice_sides=6,
            verbose=0,
            infile=None,
        )
        return diceware.get_passphrase(options)
    except Exception as exc:
        logger.warning("diceware failed (%s), using a uuid run id", exc)
        return str(uuid.uuid4())


def _fresh_id(db: Session, model) -> str:
    run_id = generate_run_id()
    while db.get(model, run_id) is not None:
        run_id = generate_run_id()
    return run_id


def record_check(db: Session, verdict: EquivalenceVerdict) -> CheckRun:
    try:
        run = CheckRun(
            id=_fresh_id(db, CheckRun),
            original_name=verdict.original_name,
            candidate_name=verdict.candidate_name,
            accepted=verdict.accepted,
            offset=verdict.offset,
            offsets=dict(verdict.offsets),
            factors=dict(verdict.count_factors),
            horizon=verdict.compared_horizon,
            report=verdict.report(),
        )
        db.add(run)
        db.commit()
        db.refresh(run)
        logger.info("recorded check %s (%s)", run.id, "ACCEPT" if run.accepted else "REJECT")
        return run
    except Exception as exc:
        db.rollback()
        raise LedgerError(f"failed to record check: {exc}") from exc


def get_check(db: Session, run_id: str) -> Optional[CheckRun]:
    return db.query(CheckRun).filter(CheckRun.id == run_id).first()


def list_checks(db: Session, accepted: Optional[bool] = None) -> List[CheckRun]:
    query = db.query(CheckRun)
    if accepted is not None:
        query = query.filter(CheckRun.accepted == accepted)
    return query.order_by(CheckRun.created_at.desc()).all()


def record_sweep(db: Session, outcome: SweepOutcome) -> SweepRun:
    try:
        offsets = sorted(set(outcome.offsets.values()))
        run = SweepRun(
            id=_fresh_id(db, SweepRun),
            fixture=outcome.fixture,
            parameters=dict(outcome.values),
            accepted=outcome.accepted,
            offset=offsets[0] if len(offsets) == 1 else None,
            error=outcome.error,
        )
        db.add(run)
        db.commit()
        db.refresh(run)
        return run
    except Exception as exc:
        db.rollback()
        raise LedgerError(f"failed to record sweep run: {exc}") from exc


def list_sweeps(db: Session, fixture: Optional[str] = None) -> List[SweepRun]:
    query = db.query(SweepRun)
    if fixture:
        query = query.filter(SweepRun.fixture == fixture)
    return query.order_by(SweepRun.created_at.desc()).all()


def cleanup_runs(db: Session, older_than: timedelta, now: Optional[datetime] = None) -> int:
    """Deletes check and sweep runs created before now - older_than; returns how many."""
    cutoff = (now or datetime.now()) - older_than
    try:
        count = db.query(CheckRun).filter(CheckRun.created_at < cutoff).delete()
        count += db.query(SweepRun).filter(SweepRun.created_at < cutoff).delete()
        db.commit()
        logger.info("removed %d runs older than %s", count, cutoff)
        return count
    except Exception as exc:
        db.rollback()
        raise LedgerError(f"failed to clean up runs: {exc}") from exc
