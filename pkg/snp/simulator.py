"""Synchronous execution under a global clock.

One step t = clock + 1 runs in this order:

  tick     closed neurons count down; one reaching 0 while holding an
           emission releases it this step and is open from now on
  apply    every open neuron without a held emission applies its enabled
           rule against its start-of-step spike count
  release  releasing neurons and d = 0 appliers send b spikes down each
           synapse; a batch reaches its target only if the target is open
           after apply, otherwise it is lost
  opened   neuron-opened events for the neurons that reopened in tick

Spikes delivered at step t are usable from step t + 1.
"""

import json
import logging
from enum import Enum
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from pydantic import BaseModel, ConfigDict

from .errors import HorizonError, NondeterminismError
from .models import Neuron, Rule, SystemDescription

logger = logging.getLogger(__name__)


class NeuronState(NamedTuple):
    spikes: int
    closed: int = 0
    pending: Optional[int] = None

    @property
    def open(self) -> bool:
        return self.closed == 0

    def render(self) -> str:
        return f"{self.spikes}/{self.closed}"


class Configuration(NamedTuple):
    states: Tuple[NeuronState, ...]
    clock: int = 0

    @property
    def spikes(self) -> List[int]:
        return [state.spikes for state in self.states]

    def render(self) -> str:
        return " ".join(state.render() for state in self.states)

    def line(self) -> str:
        return f"t={self.clock} config {self.render()}"


class EventKind(str, Enum):
    RULE_APPLIED = "rule-applied"
    SPIKES_DELIVERED = "spikes-delivered"
    SPIKES_LOST = "spikes-lost"
    NEURON_OPENED = "neuron-opened"


class TraceEvent(NamedTuple):
    step: int
    kind: EventKind
    neuron: Optional[str] = None
    rule: Optional[int] = None
    source: Optional[str] = None
    target: Optional[str] = None
    count: Optional[int] = None

    def line(self) -> str:
        if self.kind == EventKind.RULE_APPLIED:
            args = f"{self.neuron} rule={self.rule}"
        elif self.kind == EventKind.NEURON_OPENED:
            args = self.neuron
        else:
            args = f"{self.source}->{self.target} count={self.count}"
        return f"t={self.step} {self.kind.value} {args}"

    def record(self) -> Dict:
        record = {"step": self.step, "kind": self.kind.value}
        for field, value in (("from", self.source), ("to", self.target), ("count", self.count),
                             ("neuron", self.neuron), ("rule", self.rule)):
            if value is not None:
                record[field] = value
        return record


class Trace:
    """Events of a run together with the configuration reached after each step."""

    def __init__(self, initial: Configuration):
        self.events: List[TraceEvent] = []
        self.configurations: List[Configuration] = [initial]

    def append(self, configuration: Configuration, events: Sequence[TraceEvent]) -> None:
        self.configurations.append(configuration)
        self.events.extend(events)

    @property
    def steps(self) -> int:
        return self.configurations[-1].clock

    @property
    def lost_spikes(self) -> int:
        return sum(e.count for e in self.events if e.kind == EventKind.SPIKES_LOST)

    def spike_counts(self) -> List[List[int]]:
        return [configuration.spikes for configuration in self.configurations]

    def events_at(self, step: int) -> List[TraceEvent]:
        return [e for e in self.events if e.step == step]

    def lines(self, verbose: bool = False) -> List[str]:
        by_step: Dict[int, List[TraceEvent]] = {}
        for event in self.events:
            by_step.setdefault(event.step, []).append(event)
        out = [self.configurations[0].line()] if verbose else []
        for configuration in self.configurations[1:]:
            out.extend(e.line() for e in by_step.get(configuration.clock, []))
            if verbose:
                out.append(configuration.line())
        return out

    def records(self) -> List[str]:
        return [json.dumps(event.record()) for event in self.events]


class SinkRecord(BaseModel):
    model_config = ConfigDict(frozen=True)

    arrivals: Dict[str, Tuple[Tuple[int, int], ...]]

    @property
    def total_spikes(self) -> int:
        return sum(count for schedule in self.arrivals.values() for _, count in schedule)

    @property
    def first_arrival(self) -> Optional[int]:
        return min((step for schedule in self.arrivals.values() for step, _ in schedule), default=None)

    @property
    def total_runtime(self) -> Optional[int]:
        """Step of the last arrival at any sink within the horizon."""
        return max((step for schedule in self.arrivals.values() for step, _ in schedule), default=None)

    def count(self, sink: str) -> int:
        return sum(count for _, count in self.arrivals.get(sink, ()))

    def units(self, sink: str) -> List[int]:
        """One entry per spike: the step it arrived."""
        return [step for step, count in self.arrivals.get(sink, ()) for _ in range(count)]

    def lines(self) -> List[str]:
        out = []
        for sink, schedule in self.arrivals.items():
            listed = ", ".join(f"{step}x{count}" for step, count in schedule) or "none"
            out.append(f"sink {sink}: total={sum(c for _, c in schedule)} arrivals={listed}")
        out.append(f"first-arrival={self.first_arrival} total-runtime={self.total_runtime} "
                   f"total-spikes={self.total_spikes}")
        return out

    def to_dict(self) -> Dict:
        return {
            "arrivals": {sink: [list(a) for a in schedule] for sink, schedule in self.arrivals.items()},
            "total_spikes": self.total_spikes,
            "first_arrival": self.first_arrival,
            "total_runtime": self.total_runtime,
        }


class ArrivalTally:
    """Sink schedules and lost spikes folded from events as a run proceeds."""

    def __init__(self, sinks: Sequence[str]):
        self.schedules: Dict[str, List[Tuple[int, int]]] = {sink: [] for sink in sinks}
        self.lost = 0

    def add(self, events: Iterable[TraceEvent]) -> None:
        for event in events:
            if event.kind == EventKind.SPIKES_LOST:
                self.lost += event.count
            elif event.kind == EventKind.SPIKES_DELIVERED and event.target in self.schedules:
                schedule = self.schedules[event.target]
                if schedule and schedule[-1][0] == event.step:
                    schedule[-1] = (event.step, schedule[-1][1] + event.count)
                else:
                    schedule.append((event.step, event.count))

    def record(self) -> SinkRecord:
        return SinkRecord(arrivals={sink: tuple(schedule) for sink, schedule in self.schedules.items()})


class RunResult(NamedTuple):
    trace: Trace
    sinks: SinkRecord
    halted: bool


class _Network:
    """Index-based view of a system, built once per run."""

    def __init__(self, system: SystemDescription):
        self.system = system
        self.neurons: Tuple[Neuron, ...] = system.neurons
        self.ids = system.neuron_ids
        index = system.index
        self.targets: List[List[int]] = [[] for _ in self.neurons]
        for source, target in system.synapses:
            self.targets[index[source]].append(index[target])


def initial_configuration(system: SystemDescription) -> Configuration:
    return Configuration(states=tuple(NeuronState(spikes=n.initial_spikes) for n in system.neurons), clock=0)


def enabled_rule(neuron: Neuron, state: NeuronState) -> Optional[int]:
    """Index of the rule that fires, if any. Firing is obligatory."""
    if state.closed or state.pending is not None:
        return None
    hits = [i for i, rule in enumerate(neuron.rules) if rule.applicable(state.spikes)]
    if len(hits) > 1:
        raise NondeterminismError(neuron.id, hits)
    return hits[0] if hits else None


def _advance(network: _Network, config: Configuration) -> Tuple[Configuration, List[TraceEvent]]:
    t = config.clock + 1
    spikes = [s.spikes for s in config.states]
    closed = [s.closed for s in config.states]
    pending = [s.pending for s in config.states]
    events: List[TraceEvent] = []
    debug = logger.isEnabledFor(logging.DEBUG)

    opened, due = [], []
    for i, remaining in enumerate(closed):
        if remaining:
            closed[i] = remaining - 1
            if closed[i] == 0:
                opened.append(i)
                if pending[i] is not None:
                    due.append(i)

    emitters: Dict[int, int] = {i: pending[i] for i in due}
    for i, neuron in enumerate(network.neurons):
        index = enabled_rule(neuron, config.states[i]._replace(closed=closed[i], pending=pending[i]))
        if index is None:
            continue
        rule: Rule = neuron.rules[index]
        spikes[i] -= rule.consumed
        events.append(TraceEvent(t, EventKind.RULE_APPLIED, neuron=neuron.id, rule=index))
        if debug:
            logger.debug("t=%d %s applies '%s' on %d spikes", t, neuron.id, rule.text, config.states[i].spikes)
        if rule.delay:
            closed[i] = rule.delay
            pending[i] = rule.produced
        else:
            emitters[i] = rule.produced

    for i in sorted(emitters):
        produced = emitters[i]
        if not produced:
            continue
        for j in network.targets[i]:
            if closed[j] == 0:
                spikes[j] += produced
                kind = EventKind.SPIKES_DELIVERED
            else:
                kind = EventKind.SPIKES_LOST
                if debug:
                    logger.debug("t=%d %d spikes from %s lost at closed %s", t, produced, network.ids[i], network.ids[j])
            events.append(TraceEvent(t, kind, source=network.ids[i], target=network.ids[j], count=produced))
    for i in due:
        pending[i] = None

    events.extend(TraceEvent(t, EventKind.NEURON_OPENED, neuron=network.ids[i]) for i in opened)
    states = tuple(NeuronState(spikes[i], closed[i], pending[i]) for i in range(len(spikes)))
    return Configuration(states=states, clock=t), events


def step(system: SystemDescription, config: Configuration) -> Tuple[Configuration, List[TraceEvent]]:
    return _advance(_Network(system), config)


def _quiescent(network: _Network, config: Configuration) -> bool:
    """Nothing held, nothing closed, nothing enabled: no rule can ever fire again."""
    for neuron, state in zip(network.neurons, config.states):
        if state.closed or state.pending is not None:
            return False
        if enabled_rule(neuron, state) is not None:
            return False
    return True


def iterate(system: SystemDescription, horizon: Optional[int] = None
            ) -> Iterator[Tuple[Configuration, List[TraceEvent], bool]]:
    """Yields (configuration, events, halted) for step 0 and each later step."""
    horizon = system.default_horizon() if horizon is None else horizon
    if horizon < 1:
        raise HorizonError(f"horizon must be at least 1, got {horizon}")
    network = _Network(system)
    config = initial_configuration(system)
    halted = _quiescent(network, config)
    yield config, [], halted
    while not halted and config.clock < horizon:
        config, events = _advance(network, config)
        halted = _quiescent(network, config)
        yield config, events, halted


def run(system: SystemDescription, horizon: Optional[int] = None) -> RunResult:
    tally = ArrivalTally(system.sinks)
    trace: Optional[Trace] = None
    halted = False
    for config, events, halted in iterate(system, horizon):
        if trace is None:
            trace = Trace(config)
            continue
        trace.append(config, events)
        tally.add(events)
    record = tally.record()
    logger.info("%s: %s after %d steps, %d sink spikes, %d lost",
                system.name, "halted" if halted else "horizon reached", trace.steps,
                record.total_spikes, trace.lost_spikes)
    return RunResult(trace=trace, sinks=record, halted=halted)


def lost_spike_count(trace: Trace) -> int:
    return trace.lost_spikes
