"""Simulation check between a delayed system and a delay-free candidate.

The candidate simulates the original when, for every sink, its arrivals are
the original's shifted by one constant k and each original spike is matched
by f candidate spikes, f being 1 or 1+d for a delay d of the original.
Arrivals are compared as unit lists (one entry per spike): for factor f the
(f*i)-th candidate unit must equal the i-th original unit + k.
"""

import logging
from itertools import zip_longest
from typing import Dict, List, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from .errors import DelayedCandidateError, HorizonError
from .models import SystemDescription
from .simulator import RunResult, run

logger = logging.getLogger(__name__)


class Divergence(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    description: str
    sink: Optional[str] = None


class Expectation(BaseModel):
    """Values a candidate must reproduce exactly; unset fields are measured."""

    model_config = ConfigDict(frozen=True)

    offset: Optional[int] = None
    offsets: Dict[str, int] = {}
    factors: Dict[str, int] = {}


Schedule = Dict[str, Tuple[Tuple[int, int], ...]]


class EquivalenceVerdict(BaseModel):
    model_config = ConfigDict(frozen=True)

    accepted: bool
    offset: Optional[int] = None
    offsets: Dict[str, int] = {}
    count_factors: Dict[str, int] = {}
    first_divergence: Optional[Divergence] = None
    compared_horizon: int
    original_name: str = "original"
    candidate_name: str = "candidate"
    original_schedule: Schedule = {}
    candidate_schedule: Schedule = {}
    notes: Tuple[str, ...] = ()

    def report(self) -> str:
        lines = [f"{'ACCEPT' if self.accepted else 'REJECT'} {self.candidate_name} simulates {self.original_name} "
                 f"(horizon {self.compared_horizon})"]
        if self.offset is not None:
            lines.append(f"k = {self.offset}")
        for sink in self.original_schedule:
            if sink in self.offsets:
                lines.append(f"sink {sink}: offset {self.offsets[sink]} factor {self.count_factors.get(sink, '-')}")
        if self.first_divergence is not None:
            lines.append(f"first divergence at step {self.first_divergence.step}: {self.first_divergence.description}")
            lines.extend(self.diff())
        lines.extend(f"note: {note}" for note in self.notes)
        return "\n".join(lines) + "\n"

    def diff(self) -> List[str]:
        """Original and candidate arrivals side by side, one sink after the other."""
        width = max([len(self.original_name), 12])
        out = [f"  {'step x count':<8} {self.original_name:<{width}} {self.candidate_name}"]
        for sink in self.original_schedule:
            out.append(f"  sink {sink}")
            left = self.original_schedule.get(sink, ())
            right = self.candidate_schedule.get(sink, ())
            for o, c in zip_longest(left, right):
                mark = "  " if o is not None and c is not None else "! "
                out.append(f"{mark}{'':<12} {_cell(o):<{width}} {_cell(c)}")
        return out

    def to_dict(self) -> Dict:
        return {
            "accepted": self.accepted,
            "offset": self.offset,
            "offsets": self.offsets,
            "count_factors": self.count_factors,
            "first_divergence": self.first_divergence.model_dump() if self.first_divergence else None,
            "compared_horizon": self.compared_horizon,
            "notes": list(self.notes),
        }


def _cell(arrival: Optional[Tuple[int, int]]) -> str:
    return "-" if arrival is None else f"{arrival[0]}x{arrival[1]}"


def sink_schedule(system: SystemDescription, horizon: Optional[int] = None) -> Dict[str, List[Tuple[int, int]]]:
    result = run(system, horizon)
    return {sink: list(schedule) for sink, schedule in result.sinks.arrivals.items()}


def default_horizon(original: SystemDescription, candidate: SystemDescription) -> int:
    return max(original.default_horizon(), candidate.default_horizon())


def _match(original: Sequence[int], candidate: Sequence[int], offset: int, factor: int,
           halted: bool, cutoff: int) -> Optional[Tuple[int, str]]:
    """None when the unit lists agree, else (step, description) of the first disagreement."""
    if not halted:
        original = [u for u in original if u <= cutoff]
    for i, unit in enumerate(original):
        position = factor * i
        if position >= len(candidate):
            return unit + offset, f"expected a spike at step {unit + offset}, candidate has none"
        if candidate[position] != unit + offset:
            return (min(unit + offset, candidate[position]),
                    f"expected spike {position + 1} at step {unit + offset}, candidate has it at {candidate[position]}")
    if halted and len(candidate) != factor * len(original):
        extra = candidate[factor * len(original)] if len(candidate) > factor * len(original) else candidate[-1]
        return extra, f"candidate delivers {len(candidate)} spikes, expected {factor} x {len(original)}"
    return None


def compare(original: SystemDescription, candidate: SystemDescription, horizon: Optional[int] = None,
            expected: Optional[Expectation] = None, branch_offsets: bool = False) -> EquivalenceVerdict:
    """Decide whether `candidate` simulates `original` over `horizon` steps.

    Offsets must agree across sinks unless `branch_offsets` is set or the
    expectation names one offset per sink.
    """
    if candidate.has_delays:
        delayed = [n.id for n in candidate.neurons if n.max_delay]
        raise DelayedCandidateError(f"candidate {candidate.name} has delayed rules in {', '.join(delayed)}")
    horizon = default_horizon(original, candidate) if horizon is None else horizon
    if horizon < 1:
        raise HorizonError(f"horizon must be at least 1, got {horizon}")
    expected = expected or Expectation()

    ran_original: RunResult = run(original, horizon)
    ran_candidate: RunResult = run(candidate, horizon)
    if not ran_original.sinks.total_spikes and not ran_candidate.sinks.total_spikes:
        raise HorizonError(f"no spike reaches a sink of either system within {horizon} steps")

    allowed = sorted({1} | {1 + d for d in original.delays.values() if d})
    max_delay = original.max_delay
    notes: List[str] = []
    if not ran_original.halted:
        notes.append(f"{original.name} does not halt within {horizon} steps; arrivals after "
                     f"horizon - k - {max_delay} are not compared")

    offsets: Dict[str, int] = {}
    factors: Dict[str, int] = {}
    divergence: Optional[Divergence] = None
    for sink in original.sinks:
        ours = ran_original.sinks.units(sink)
        if sink not in ran_candidate.sinks.arrivals:
            divergence = Divergence(step=ours[0] if ours else 0, sink=sink,
                                    description=f"sink {sink} is not a sink of {candidate.name}")
            break
        theirs = ran_candidate.sinks.units(sink)
        if not ours and not theirs:
            continue
        if not ours or not theirs:
            divergence = Divergence(step=(ours or theirs)[0], sink=sink,
                                    description=f"sink {sink}: {len(ours)} original spikes, {len(theirs)} candidate spikes")
            break

        offset = expected.offsets.get(sink, expected.offset)
        offset = theirs[0] - ours[0] if offset is None else offset
        cutoff = horizon - offset - max_delay
        choices = [expected.factors[sink]] if sink in expected.factors else allowed
        if ran_original.halted and sink not in expected.factors:
            ratio, rest = divmod(len(theirs), len(ours))
            choices = [ratio] if not rest and ratio in allowed else []
            if not choices:
                divergence = Divergence(step=theirs[-1], sink=sink,
                                        description=f"sink {sink}: {len(theirs)} candidate spikes for {len(ours)} "
                                                    f"original, no factor in {allowed}")
                break
        failure = None
        for factor in choices:
            failure = _match(ours, theirs, offset, factor, ran_original.halted, cutoff)
            if failure is None:
                offsets[sink], factors[sink] = offset, factor
                break
        if failure is not None:
            divergence = Divergence(step=failure[0], sink=sink, description=f"sink {sink}: {failure[1]}")
            break

    if divergence is None and expected.offset is None and not expected.offsets and not branch_offsets:
        if len(set(offsets.values())) > 1:
            step = min(ran_candidate.sinks.units(s)[0] for s in offsets)
            divergence = Divergence(step=step, description=f"sinks disagree on the offset: {offsets}")

    accepted = divergence is None and bool(offsets)
    if divergence is None and not offsets:
        divergence = Divergence(step=0, description="no sink of the original is observable in both systems")
    common = sorted(set(offsets.values()))
    verdict = EquivalenceVerdict(
        accepted=accepted,
        offset=(common[0] if len(common) == 1 else offsets[next(iter(offsets))]) if accepted else None,
        offsets=offsets if accepted else {},
        count_factors=factors if accepted else {},
        first_divergence=divergence,
        compared_horizon=horizon,
        original_name=original.name,
        candidate_name=candidate.name,
        original_schedule=ran_original.sinks.arrivals,
        candidate_schedule=ran_candidate.sinks.arrivals,
        notes=tuple(notes),
    )
    logger.info("%s vs %s: %s", original.name, candidate.name, "ACCEPT" if accepted else "REJECT")
    return verdict
