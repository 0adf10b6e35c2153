"""Shipped example documents and parameter sweeps over them."""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from pydantic import BaseModel, ConfigDict

from .document import declared_parameters, load_system
from .eliminator import transform
from .errors import SNPError
from .models import SystemDescription

logger = logging.getLogger(__name__)

FIXTURES_DIR = Path(__file__).resolve().parent.parent / "fixtures"

# construct fixtures and the parameters their delays are read from
CONSTRUCT_FIXTURES: Dict[str, Tuple[str, ...]] = {
    "sequential_single": ("d",),
    "sequential_double": ("d1", "d2"),
    "iteration_single": ("d",),
    "iteration_double": ("d1", "d2"),
    "split_parent": ("d",),
    "split_child": ("d",),
    "join_parent": ("d",),
    "join_junction": ("d",),
}


def fixture_path(name: str, directory: Optional[Path] = None) -> Path:
    path = Path(directory or FIXTURES_DIR) / f"{name}.snp"
    if not path.is_file():
        raise FileNotFoundError(f"no fixture named {name!r} in {path.parent}")
    return path


def available_fixtures(directory: Optional[Path] = None) -> List[str]:
    return sorted(p.stem for p in Path(directory or FIXTURES_DIR).glob("*.snp"))


def fixture_parameters(name: str, directory: Optional[Path] = None) -> Dict[str, int]:
    return declared_parameters(fixture_path(name, directory).read_text(encoding="utf-8"))


def load_fixture(name: str, overrides: Optional[Mapping[str, int]] = None,
                 directory: Optional[Path] = None) -> SystemDescription:
    return load_system(fixture_path(name, directory), overrides)


class SweepOutcome(BaseModel):
    model_config = ConfigDict(frozen=True)

    fixture: str
    values: Dict[str, int]
    accepted: bool
    offsets: Dict[str, int] = {}
    factors: Dict[str, int] = {}
    error: Optional[str] = None

    def line(self) -> str:
        assigned = " ".join(f"{k}={v}" for k, v in self.values.items())
        if self.error is not None:
            return f"{self.fixture} {assigned} ERROR {self.error}"
        verdict = "ACCEPT" if self.accepted else "REJECT"
        return f"{self.fixture} {assigned} {verdict} offsets={self.offsets} factors={self.factors}"


def check_fixture(name: str, values: Mapping[str, int], horizon: Optional[int] = None,
                  directory: Optional[Path] = None) -> SweepOutcome:
    """Loads the fixture with `values`, transforms it and reports the verdict that checked its offsets."""
    values = dict(values)
    try:
        result = transform(load_fixture(name, values, directory), horizon)
    except SNPError as exc:
        logger.info("%s %s: %s", name, values, exc)
        return SweepOutcome(fixture=name, values=values, accepted=False, error=str(exc))
    verdict = result.verdict
    return SweepOutcome(fixture=name, values=values,
                        accepted=verdict.accepted if verdict is not None else True,
                        offsets=result.offsets, factors=result.factors)


def run_sweep(name: str, parameter: str, values: Iterable[int], horizon: Optional[int] = None,
              workers: int = 4, fixed: Optional[Mapping[str, int]] = None,
              directory: Optional[Path] = None) -> List[SweepOutcome]:
    """One transform-and-check per value, in parallel; results follow the order of `values`."""
    fixed = dict(fixed or {})
    assignments = [{**fixed, parameter: value} for value in values]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        outcomes = list(pool.map(lambda values: check_fixture(name, values, horizon, directory), assignments))
    logger.info("sweep %s over %s: %d/%d accepted", name, parameter,
                sum(o.accepted for o in outcomes), len(outcomes))
    return outcomes
