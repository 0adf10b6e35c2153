"""Rewrites of delay-bearing routing constructs into delay-free fragments.

Canonical pieces:
  Reservoir(N)        N initial spikes, a^+/a -> a: one spike per step for N steps
  Primed reservoir(N) 2N-1 spikes, (a^2)^+/a^2 -> a: the same train, started by one incoming spike
  Accumulator(N)      a^N -> a: fires once N spikes have arrived
  Relay               a -> a

A delay d on a neuron that fires once is traded for a train of 1+d spikes
that an accumulator collects, so timing is preserved up to a constant.
Every rewrite is anchored at the entry of its own construct: the plain
relay feeding it turns into a reservoir (offset 0), or a new pool is put
on the synapse into it (offset 1).
"""

import logging
from collections import defaultdict
from math import prod
from typing import Dict, List, NamedTuple, Optional, Sequence, Set, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict

from .constructs import Construct, Iteration, Join, Sequential, Split, classify_constructs
from .equivalence import EquivalenceVerdict, Expectation, compare
from .errors import OutOfScopeError, RestrictionError, RewriteVerificationError, UnanchoredConstructError
from .models import Neuron, Rule, Synapse, SystemDescription, accumulator, primed_reservoir, relay, reservoir
from .simulator import EventKind, run
from .validation import ViolationKind, cycle_members, repeated_spikers, to_digraph, validate_restricted

logger = logging.getLogger(__name__)


class Fragment(BaseModel):
    """Edit script over a system: neurons added or replaced by id, removals, synapse changes."""

    model_config = ConfigDict(frozen=True)

    neurons: Tuple[Neuron, ...] = ()
    removed: Tuple[str, ...] = ()
    added_synapses: Tuple[Synapse, ...] = ()
    removed_synapses: Tuple[Synapse, ...] = ()
    new_source: Optional[str] = None
    placement: Dict[str, str] = {}

    @property
    def empty(self) -> bool:
        return not (self.neurons or self.removed or self.added_synapses or self.removed_synapses)

    def merged(self, other: "Fragment") -> "Fragment":
        return Fragment(
            neurons=self.neurons + other.neurons,
            removed=self.removed + other.removed,
            added_synapses=self.added_synapses + other.added_synapses,
            removed_synapses=self.removed_synapses + other.removed_synapses,
            new_source=self.new_source or other.new_source,
            placement={**self.placement, **other.placement},
        )


class RewriteResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    target: Optional[Construct] = None
    construction: str
    fragment: Fragment = Fragment()
    boundary_map: Dict[str, Tuple[str, ...]] = {}
    entry: Optional[str] = None
    expected_offset: int = 0
    expected_count_factor: int = 1
    train_edges: Tuple[Tuple[str, str, int], ...] = ()
    notes: Tuple[str, ...] = ()

    @property
    def needs_normalizer(self) -> bool:
        return bool(self.train_edges)

    def apply(self, system: SystemDescription) -> SystemDescription:
        return apply_fragment(system, self.fragment)

    def describe(self) -> str:
        where = self.target.describe() if self.target is not None else "system"
        return (f"{self.construction} on {where}: offset {self.expected_offset}, "
                f"factor {self.expected_count_factor}")


class _SystemBuilder:
    def __init__(self, system: SystemDescription):
        self.name = system.name
        self.neurons: Dict[str, Neuron] = {n.id: n for n in system.neurons}
        self.synapses: List[Synapse] = list(system.synapses)
        self.source = system.declared_source
        self.sinks = list(system.declared_sinks)

    def fresh(self, base: str) -> str:
        candidate, n = base, 2
        while candidate in self.neurons:
            candidate = f"{base}{n}"
            n += 1
        return candidate

    def put(self, neuron: Neuron, before: Optional[str] = None) -> None:
        if neuron.id in self.neurons or before is None or before not in self.neurons:
            self.neurons[neuron.id] = neuron
            return
        reordered: Dict[str, Neuron] = {}
        for neuron_id, existing in self.neurons.items():
            if neuron_id == before:
                reordered[neuron.id] = neuron
            reordered[neuron_id] = existing
        self.neurons = reordered

    def remove(self, neuron_id: str) -> None:
        self.neurons.pop(neuron_id, None)
        self.synapses = [s for s in self.synapses if neuron_id not in s]

    def link(self, source: str, target: str) -> None:
        if (source, target) not in self.synapses:
            self.synapses.append((source, target))

    def unlink(self, source: str, target: str) -> None:
        self.synapses = [s for s in self.synapses if s != (source, target)]

    def build(self, name: Optional[str] = None) -> SystemDescription:
        return SystemDescription(
            name=name or self.name,
            neurons=tuple(self.neurons.values()),
            synapses=tuple(self.synapses),
            declared_source=self.source,
            declared_sinks=tuple(self.sinks),
        )


def apply_fragment(system: SystemDescription, fragment: Fragment) -> SystemDescription:
    builder = _SystemBuilder(system)
    for neuron_id in fragment.removed:
        builder.remove(neuron_id)
    for neuron in fragment.neurons:
        builder.put(neuron, before=fragment.placement.get(neuron.id))
    for synapse in fragment.removed_synapses:
        builder.unlink(*synapse)
    for synapse in fragment.added_synapses:
        builder.link(*synapse)
    if fragment.new_source is not None and builder.source is not None:
        builder.source = fragment.new_source
    return builder.build()


def _fresh(system: SystemDescription, base: str, taken: Sequence[str] = ()) -> str:
    used = set(system.neuron_ids) | set(taken)
    candidate, n = base, 2
    while candidate in used:
        candidate = f"{base}{n}"
        n += 1
    return candidate


def _is_unit(rule: Optional[Rule]) -> bool:
    """Passes exactly one spike on for every spike received: a -> a or a^+/a -> a."""
    return rule is not None and rule.consumed == 1 and rule.produced == 1 and rule.guard.contains(1)


def _require_unit(system: SystemDescription, neuron_ids, what: str) -> None:
    for neuron_id in neuron_ids:
        if not _is_unit(system.neuron(neuron_id).rule):
            raise OutOfScopeError(f"{what} {neuron_id} must carry a single a -> a rule to be rewritten")


def _convertible(system: SystemDescription, neuron_id: str) -> bool:
    """Undelayed unit neuron firing once: the one-spike source, or an empty neuron with a single input."""
    neuron = system.neuron(neuron_id)
    if not _is_unit(neuron.rule) or neuron.max_delay:
        return False
    if neuron_id == system.source:
        return neuron.initial_spikes == 1
    return neuron.initial_spikes == 0 and len(system.predecessors(neuron_id)) == 1


def _feeding_chain(system: SystemDescription, neuron_id: str) -> List[str]:
    """[entry, relay, ..., neuron_id]: the plain relays feeding neuron_id single file."""
    chain = [neuron_id]
    while chain[0] != system.source:
        predecessors = system.predecessors(chain[0])
        if len(predecessors) != 1:
            break
        previous = predecessors[0]
        if previous in chain or len(system.successors(previous)) != 1 or not _convertible(system, previous):
            break
        chain.insert(0, previous)
    return chain


def _pool(system: SystemDescription, neuron_id: str, width: int) -> Tuple[str, Fragment]:
    """New reservoir of `width` spikes on the synapse into neuron_id; a new source when neuron_id is the source."""
    pool = _fresh(system, f"{neuron_id}_res")
    if neuron_id == system.source:
        return pool, Fragment(neurons=(reservoir(pool, width),), added_synapses=((pool, neuron_id),),
                              new_source=pool, placement={pool: neuron_id})
    predecessors = system.predecessors(neuron_id)
    if len(predecessors) != 1:
        raise UnanchoredConstructError(
            f"{neuron_id} has {len(predecessors)} incoming synapses; a reservoir needs exactly one to sit on")
    (previous,) = predecessors
    return pool, Fragment(neurons=(primed_reservoir(pool, width),),
                          added_synapses=((previous, pool), (pool, neuron_id)),
                          removed_synapses=((previous, neuron_id),), placement={pool: neuron_id})


class _Entry(NamedTuple):
    fragment: Fragment
    neuron: str
    offset: int
    inserted: bool
    note: str

    def boundary(self, neuron_id: str) -> Dict[str, Tuple[str, ...]]:
        if self.inserted:
            return {neuron_id: (self.neuron, neuron_id)}
        return {self.neuron: (self.neuron,), neuron_id: (neuron_id,)}


def _entry(system: SystemDescription, neuron_id: str, width: int, include_self: bool) -> _Entry:
    """Start of the train of `width` spikes that reaches neuron_id.

    The head of the feeding chain (neuron_id itself when `include_self`)
    becomes a reservoir, offset 0; without a convertible head a new pool
    goes in front of neuron_id, offset 1.
    """
    head = _feeding_chain(system, neuron_id)[0]
    if head != neuron_id or (include_self and _convertible(system, head)):
        if head == system.source:
            converted, kind = reservoir(head, width), "reservoir"
        else:
            converted, kind = primed_reservoir(head, width), "primed reservoir"
        return _Entry(Fragment(neurons=(converted,)), head, 0, False,
                      f"{head} becomes a {kind} of {width} spikes")
    pool, fragment = _pool(system, neuron_id, width)
    return _Entry(fragment, pool, 1, True, f"new reservoir {pool} of {width} spikes in front of {neuron_id}")


def _identity(construct: Optional[Construct], note: str) -> RewriteResult:
    return RewriteResult(target=construct, construction="identity", notes=(note,))


def eliminate_sequential(system: SystemDescription, construct: Sequential) -> RewriteResult:
    """A pool of N = prod(1+d_i) spikes drains into the head, now an accumulator of N.

    Delays are read from `system`; the path is rewritten up to its last
    delayed neuron. Offset N - sum(d_i).
    """
    path = construct.path
    delays = [system.neuron(n).max_delay for n in path[:-1]]
    if not any(delays):
        return _identity(construct, "chain carries no delay")
    positive = [d for d in delays if d]
    if any(a < b for a, b in zip(positive, positive[1:])):
        raise OutOfScopeError(
            f"sequential path {' -> '.join(path)} has a delay followed by a larger one ({positive}); "
            "eliminating d1 < d2 is an open problem")
    last = max(i for i, d in enumerate(delays) if d)
    span = path[: last + 1]
    _require_unit(system, span, "chain neuron")

    total = prod(1 + d for d in delays)
    head = path[0]
    pool, entry = _pool(system, head, total)
    neurons = [accumulator(head, total)] + [relay(n) for n in span[1:]]
    offset = total - sum(delays)
    logger.info("sequential %s: reservoir %s of %d spikes, offset %d", " -> ".join(path), pool, total, offset)
    return RewriteResult(
        target=construct,
        construction="sequential-reservoir",
        fragment=entry.merged(Fragment(neurons=tuple(neurons))),
        boundary_map={head: (pool, head)},
        entry=pool,
        expected_offset=offset,
        notes=(f"reservoir {pool} holds {total} = " + " * ".join(f"(1+{d})" for d in positive) + " spikes",),
    )


def first_emissions(system: SystemDescription, cycle: Sequence[str]) -> List[int]:
    """Step, relative to the cycle being entered, at which each cycle neuron first emits."""
    emissions, elapsed = [], 0
    for neuron_id in cycle:
        elapsed += 1 + system.neuron(neuron_id).max_delay
        emissions.append(elapsed)
    return emissions


def eliminate_iteration(system: SystemDescription, construct: Iteration) -> RewriteResult:
    """Two-neuron clock plus one gate per tapped cycle neuron.

    The clock pair L1 <-> L2 fires every step once started; a gate with
    rule a^P -> a, P the loop period, fires every P steps, phased by its
    preload so it emits one step after the cycle neuron it replaces.
    """
    cycle = construct.cycle
    delays = [system.neuron(n).max_delay for n in cycle]
    if not any(delays):
        return _identity(construct, "cycle carries no delay")
    if sum(1 for d in delays if d) > 2:
        raise OutOfScopeError(f"cycle {' -> '.join(cycle)} has more than two delayed neurons")
    _require_unit(system, cycle, "cycle neuron")

    members = set(cycle)
    entries = [(p, n) for n in cycle for p in system.predecessors(n) if p not in members]
    loaded = [system.neuron(n).initial_spikes for n in cycle]
    seeded = not entries and loaded[0] == 1 and not any(loaded[1:])
    entered = len(entries) == 1 and entries[0][1] == cycle[0] and not any(loaded)
    if not (seeded or entered):
        raise OutOfScopeError(f"cycle {' -> '.join(cycle)} must hold one spike at its start or have a single entry")

    period = len(cycle) + sum(delays)
    emissions = first_emissions(system, cycle)
    first, second = cycle[0], cycle[1]
    spikes = 1 if seeded else 0
    neurons = [reservoir(first, spikes), reservoir(second, spikes)]
    removed = tuple(cycle[2:])
    added: List[Synapse] = [(second, first)] if len(cycle) > 2 else []
    if entered:
        added.append((entries[0][0], second))
    removed_synapses = list(construct.exits)

    gates: Dict[str, str] = {}
    taken: List[str] = []
    for position, neuron_id in enumerate(cycle):
        exits = [target for origin, target in construct.exits if origin == neuron_id]
        if not exits:
            continue
        gate = _fresh(system, f"{neuron_id}_gate", taken)
        taken.append(gate)
        gates[neuron_id] = gate
        neurons.append(accumulator(gate, period, initial_spikes=period - emissions[position]))
        added.append((first, gate))
        added.extend((gate, target) for target in exits)

    logger.info("iteration %s: period %d, gates %s", " -> ".join(cycle), period, gates)
    boundary = {n: (first,) for n in removed}
    boundary.update({n: (gate,) for n, gate in gates.items()})
    return RewriteResult(
        target=construct,
        construction="iteration-clock",
        fragment=Fragment(neurons=tuple(neurons), removed=removed, added_synapses=tuple(added),
                          removed_synapses=tuple(removed_synapses)),
        boundary_map=boundary,
        entry=first,
        expected_offset=1,
        notes=(f"loop period {period}; gate preloads " +
               ", ".join(f"{gates[n]}={period - emissions[i]}" for i, n in enumerate(cycle) if n in gates),),
    )


def eliminate_split(system: SystemDescription, construct: Split) -> RewriteResult:
    """Delay on the parent, or one common delay on some children.

    Parent delay: the entry feeding the parent becomes Reservoir(1+d) and
    the parent Accumulator(1+d), offset 0; a parent without a plain feeder
    (the source, say) gets a new reservoir in front, offset 1. Child delay:
    the entry (the parent itself when plain) becomes Reservoir(1+d),
    delayed children Accumulator(1+d); undelayed children receive a train
    of 1+d spikes (count factor 1+d).
    """
    parent, children = construct.parent, construct.children
    parent_delay = system.neuron(parent).max_delay
    child_delays = {c: system.neuron(c).max_delay for c in children if system.neuron(c).max_delay}
    if not parent_delay and not child_delays:
        return _identity(construct, "split carries no delay")
    if parent_delay and child_delays:
        raise OutOfScopeError(f"split at {parent}: parent and children are both delayed")

    if parent_delay:
        _require_unit(system, [parent], "split parent")
        width = 1 + parent_delay
        entry = _entry(system, parent, width, include_self=False)
        return RewriteResult(
            target=construct,
            construction="split-parent",
            fragment=entry.fragment.merged(Fragment(neurons=(accumulator(parent, width),))),
            boundary_map=entry.boundary(parent),
            entry=entry.neuron,
            expected_offset=entry.offset,
            notes=(entry.note,),
        )

    if len(set(child_delays.values())) > 1:
        raise OutOfScopeError(f"split at {parent}: children carry unequal delays {sorted(set(child_delays.values()))}")
    width = 1 + next(iter(child_delays.values()))
    _require_unit(system, [parent, *child_delays], "split neuron")
    entry = _entry(system, parent, width, include_self=True)
    trains = tuple((parent, c, width) for c in children if c not in child_delays)
    boundary = entry.boundary(parent)
    boundary.update({c: (c,) for c in child_delays})
    notes = [entry.note] + ([f"undelayed children receive {width} spikes each"] if trains else [])
    return RewriteResult(
        target=construct,
        construction="split-child",
        fragment=entry.fragment.merged(Fragment(neurons=tuple(accumulator(c, width) for c in child_delays))),
        boundary_map=boundary,
        entry=entry.neuron,
        expected_offset=entry.offset,
        expected_count_factor=width if trains else 1,
        train_edges=trains,
        notes=tuple(notes),
    )


def eliminate_join(system: SystemDescription, construct: Join) -> RewriteResult:
    """Parents fed by one split neuron, delay on some parents (equal) or on the junction.

    Junction delay: the entry feeding the parents becomes Reservoir(1+d),
    parents Accumulator(1+d), junction a^p -> a, offset 0. Parent delay: a
    new reservoir feeds the entry, parents Accumulator(1+d), junction
    a^p -> a, offset 1.
    """
    parents, junction = construct.parents, construct.junction
    parent_delays = {p: system.neuron(p).max_delay for p in parents if system.neuron(p).max_delay}
    junction_delay = system.neuron(junction).max_delay
    if not parent_delays and not junction_delay:
        return _identity(construct, "join carries no delay")
    if parent_delays and junction_delay:
        raise OutOfScopeError(f"join at {junction}: parents and junction are both delayed")
    if len(set(parent_delays.values())) > 1:
        raise OutOfScopeError(f"join at {junction}: parents carry distinct delays {sorted(set(parent_delays.values()))}")

    count = len(parents)
    rule = system.neuron(junction).rule
    if rule is None or rule.consumed != count or rule.produced != 1:
        raise OutOfScopeError(f"junction {junction} must consume one spike per parent ({count})")
    feeders = {tuple(system.predecessors(p)) for p in parents}
    if len(feeders) != 1 or len(next(iter(feeders))) != 1:
        raise UnanchoredConstructError(f"parents of {junction} do not share a single feeding neuron")
    (feeder,) = next(iter(feeders))
    if sorted(system.successors(feeder)) != sorted(parents):
        raise UnanchoredConstructError(f"{feeder} feeds neurons outside the join at {junction}")
    _require_unit(system, [*parents, feeder], "join neuron")
    if system.neuron(feeder).max_delay:
        raise UnanchoredConstructError(f"feeder {feeder} of the join at {junction} is delayed")

    junction_neuron = system.neuron(junction)
    merged = Neuron(id=junction, initial_spikes=junction_neuron.initial_spikes,
                    rules=(Rule.parse(f"a^{count} -> a"),))
    if junction_delay:
        width = 1 + junction_delay
        entry = _entry(system, feeder, width, include_self=True)
        neurons = [accumulator(p, width) for p in parents] + [merged]
        return RewriteResult(
            target=construct,
            construction="join-junction",
            fragment=entry.fragment.merged(Fragment(neurons=tuple(neurons))),
            boundary_map={**entry.boundary(feeder), junction: (junction,)},
            entry=entry.neuron,
            expected_offset=entry.offset,
            notes=(entry.note, f"parents collect {width} spikes each; junction fires on {count}"),
        )

    width = 1 + next(iter(parent_delays.values()))
    head = _feeding_chain(system, feeder)[0]
    pool, fragment = _pool(system, head, width)
    neurons = [relay(head)] + [accumulator(p, width) for p in parents] + [merged]
    return RewriteResult(
        target=construct,
        construction="join-parent",
        fragment=fragment.merged(Fragment(neurons=tuple(neurons))),
        boundary_map={head: (pool, head)},
        entry=pool,
        expected_offset=1,
        notes=(f"new reservoir {pool} of {width} spikes in front of {head}",),
    )


def make_normalizer(d: int, neuron_id: str = "normalizer") -> Neuron:
    """Accumulator turning a train of 1+d spikes back into one spike, one step after the train ends."""
    if d < 1:
        raise ValueError(f"normalizer needs d >= 1, got {d}")
    return accumulator(neuron_id, 1 + d)


def insert_normalizer(system: SystemDescription, synapse: Synapse, width: int) -> Tuple[SystemDescription, str]:
    """Places Accumulator(width) on `synapse`; returns the new system and the normalizer id."""
    source, target = synapse
    if synapse not in system.synapses:
        raise OutOfScopeError(f"no synapse {source} -> {target} to normalize")
    builder = _SystemBuilder(system)
    norm = builder.fresh(f"{source}_{target}_norm")
    builder.put(make_normalizer(width - 1, norm), before=target)
    builder.unlink(source, target)
    builder.link(source, norm)
    builder.link(norm, target)
    logger.debug("normalizer %s (a^%d -> a) on %s -> %s", norm, width, source, target)
    return builder.build(), norm


class TransformResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    original: SystemDescription
    system: SystemDescription
    offsets: Dict[str, int]
    factors: Dict[str, int]
    rewrites: Tuple[RewriteResult, ...] = ()
    normalizers: Tuple[str, ...] = ()
    notes: Tuple[str, ...] = ()
    verdict: Optional[EquivalenceVerdict] = None

    def report(self) -> str:
        lines = [f"transform {self.original.name} -> {self.system.name}"]
        applied = [r for r in self.rewrites if r.construction != "identity"]
        if not applied and not self.normalizers:
            lines.append("no rewrites")
        lines.extend(f"rewrite: {r.describe()}" for r in applied)
        lines.extend(f"normalizer: {n}" for n in self.normalizers)
        for sink in sorted(self.offsets):
            lines.append(f"sink {sink}: offset {self.offsets[sink]} factor {self.factors.get(sink, 1)}")
        if self.verdict is not None:
            lines.append(f"checked over {self.verdict.compared_horizon} steps: "
                         f"{'ACCEPT' if self.verdict.accepted else 'REJECT'}")
        lines.extend(f"note: {note}" for note in self.notes)
        return "\n".join(lines) + "\n"

    def to_dict(self) -> Dict:
        return {
            "system": self.system.to_dict(),
            "offsets": self.offsets,
            "factors": self.factors,
            "rewrites": [r.describe() for r in self.rewrites if r.construction != "identity"],
            "normalizers": list(self.normalizers),
            "notes": list(self.notes),
            "checked_horizon": self.verdict.compared_horizon if self.verdict is not None else None,
        }


def _delayed(system: SystemDescription, construct: Construct) -> List[str]:
    if isinstance(construct, Sequential):
        names = construct.path[:-1]
    elif isinstance(construct, Join):
        names = construct.parents + (construct.junction,)
    else:
        names = construct.neurons
    return [n for n in names if n in system.index and system.neuron(n).max_delay]


def _present(system: SystemDescription, construct: Construct, inserted: Set[str]) -> bool:
    """Construct neurons all survive and its synapses too, possibly with a new neuron spliced in."""
    ids = system.index
    if not all(n in ids for n in construct.neurons):
        return False
    if isinstance(construct, Sequential):
        return True
    synapses = set(system.synapses)
    return all(
        (source, target) in synapses
        or any((x, target) in synapses for x in system.successors(source) if x in inserted)
        for source, target in construct.synapses
    )


_ANCHORED = ((Join, eliminate_join), (Split, eliminate_split), (Sequential, eliminate_sequential))


def _rerouted(system: SystemDescription, trains: Sequence[Tuple[str, str, int]]) -> List[Tuple[str, str, int]]:
    """Trains whose synapse got a pool spliced in now end at the pool."""
    synapses = set(system.synapses)
    rerouted = []
    for source, target, width in trains:
        if (source, target) not in synapses:
            spliced = [x for x in system.successors(source) if (x, target) in synapses]
            if spliced:
                target = spliced[0]
        rerouted.append((source, target, width))
    return rerouted


def _propagate_trains(system: SystemDescription, trains: List[Tuple[str, str, int]]
                      ) -> Tuple[SystemDescription, Dict[str, int], List[Tuple[str, int]]]:
    factors: Dict[str, int] = {}
    normalizers: List[Tuple[str, int]] = []
    pending = list(trains)
    while pending:
        source, target, width = pending.pop(0)
        if target in system.sinks:
            factors[target] = max(factors.get(target, 1), width)
            continue
        neuron = system.neuron(target)
        if _is_unit(neuron.rule) and not neuron.max_delay and len(system.predecessors(target)) == 1:
            pending.extend((target, w, width) for w in system.successors(target))
            continue
        system, norm = insert_normalizer(system, (source, target), width)
        normalizers.append((norm, width))
    return system, factors, normalizers


def _first_deliveries(system: SystemDescription, horizon: Optional[int]) -> Dict[Synapse, int]:
    first: Dict[Synapse, int] = {}
    for event in run(system, horizon).trace.events:
        if event.kind == EventKind.SPIKES_DELIVERED:
            first.setdefault((event.source, event.target), event.step)
    return first


def _origin(original: Set[Synapse], candidate: SystemDescription, neuron_id: str, target: str) -> Optional[str]:
    """Neuron of the original whose synapse into `target` now runs through neuron_id."""
    seen: Set[str] = set()
    while (neuron_id, target) not in original:
        predecessors = candidate.predecessors(neuron_id)
        if len(predecessors) != 1 or neuron_id in seen:
            return None
        seen.add(neuron_id)
        neuron_id = predecessors[0]
    return neuron_id


def compose_offsets(original: SystemDescription, candidate: SystemDescription, contributions: Dict[str, int],
                    horizon: Optional[int] = None) -> Dict[str, int]:
    """Per-sink offset obtained by adding up the rewrite offsets along every path.

    A neuron's shift is the latest shift among its inputs plus its own
    contribution. Where branches of the original meet, the branch that
    arrives last in the original decides: the junction shifts by
    max_p(a_p + shift_p) - max_p(a_p), a_p the original first arrival
    over p.
    """
    graph = to_digraph(candidate)
    dag = nx.condensation(graph)
    original_edges = set(original.synapses)
    looped = cycle_members(to_digraph(original))
    first = _first_deliveries(original, horizon)
    shift_in: Dict[str, int] = {}
    shift_out: Dict[str, int] = {}

    for component in nx.topological_sort(dag):
        members = dag.nodes[component]["members"]
        feeders = [p for n in members for p in graph.predecessors(n) if p not in members]
        incoming = max((shift_out[p] for p in feeders), default=0)
        if len(members) == 1:
            (neuron_id,) = members
            if (neuron_id in original.index and neuron_id not in looped
                    and len(original.predecessors(neuron_id)) >= 2 and feeders):
                arrivals = []
                for p in feeders:
                    origin = _origin(original_edges, candidate, p, neuron_id)
                    arrivals.append(first.get((origin, neuron_id)) if origin is not None else None)
                if all(a is not None for a in arrivals):
                    latest = max(arrivals)
                    incoming = max(a + shift_out[p] for a, p in zip(arrivals, feeders)) - latest
        added = sum(contributions.get(n, 0) for n in members)
        for n in members:
            shift_in[n] = incoming
            shift_out[n] = incoming + added
    return {sink: shift_in[sink] for sink in original.sinks if sink in shift_in}


def _stitch(current: SystemDescription, rewrite: RewriteResult, placed: Dict[str, Tuple[Neuron, str]]
            ) -> SystemDescription:
    """Applies a fragment; a neuron two fragments both place is kept once if they agree on a plain relay."""
    for neuron in rewrite.fragment.neurons:
        previous = placed.get(neuron.id)
        if previous is None:
            placed[neuron.id] = (neuron, rewrite.describe())
            continue
        if previous[0] != neuron or not _is_unit(neuron.rule):
            raise OutOfScopeError(f"{rewrite.target.describe()} rewrites {neuron.id}, "
                                  f"already placed by {previous[1]}")
        logger.debug("merged relay %s shared by %s and %s", neuron.id, previous[1], rewrite.describe())
    return rewrite.apply(current)


def transform(system: SystemDescription, horizon: Optional[int] = None) -> TransformResult:
    """Delay-free system simulating `system`, with per-sink offsets and count factors.

    Offsets and factors are composed from the rewrites and then checked
    against a simulation of both systems.
    """
    report = validate_restricted(system)
    lost = report.of_kind(ViolationKind.LOST_SPIKE_RISK)
    if lost:
        raise OutOfScopeError(
            f"{lost[0].message}; eliminating delays where d1 < d2 on a path is an open problem")
    blocking = report.blocking
    if blocking:
        raise RestrictionError(blocking)
    routing = classify_constructs(system)

    if not system.has_delays:
        logger.info("%s: delay-free, no rewrites", system.name)
        return TransformResult(original=system, system=system, offsets={sink: 0 for sink in system.sinks},
                               factors={sink: 1 for sink in system.sinks},
                               rewrites=(_identity(None, "system is delay-free"),))

    repeated = repeated_spikers(system)
    current = system
    rewrites: List[RewriteResult] = []
    trains: List[Tuple[str, str, int]] = []
    placed: Dict[str, Tuple[Neuron, str]] = {}
    for construct in routing.of_kind("iteration"):
        if _delayed(current, construct):
            rewrite = eliminate_iteration(current, construct)
            current = _stitch(current, rewrite, placed)
            rewrites.append(rewrite)
            logger.info("applied %s", rewrite.describe())

    for kind, eliminate in _ANCHORED:
        for construct in routing.constructs:
            if not isinstance(construct, kind):
                continue
            inserted = set(current.neuron_ids) - set(system.neuron_ids)
            delayed = _delayed(current, construct)
            if not delayed or not _present(current, construct, inserted):
                continue
            again = [n for n in delayed if n in repeated]
            if again:
                raise OutOfScopeError(f"{construct.describe()}: delayed {', '.join(again)} may spike more than once")
            rewrite = eliminate(current, construct)
            current = _stitch(current, rewrite, placed)
            trains = _rerouted(current, trains) + list(rewrite.train_edges)
            rewrites.append(rewrite)
            logger.info("applied %s", rewrite.describe())

    leftover = [n.id for n in current.neurons if n.max_delay]
    if leftover:
        raise OutOfScopeError(f"no rewrite covers the delay on {', '.join(leftover)}")

    current, train_factors, normalizers = _propagate_trains(current, trains)
    candidate = current.model_copy(update={"name": f"{system.name}_nodelay"})

    contributions: Dict[str, int] = defaultdict(int)
    for rewrite in rewrites:
        if rewrite.entry is not None:
            contributions[rewrite.entry] += rewrite.expected_offset
    for norm, width in normalizers:
        contributions[norm] += width
    offsets = compose_offsets(system, candidate, contributions, horizon)
    factors = {sink: train_factors.get(sink, 1) for sink in system.sinks}

    verdict = compare(system, candidate, horizon=horizon,
                      expected=Expectation(offsets=offsets, factors=factors), branch_offsets=True)
    if not verdict.accepted:
        logger.warning("%s: composed offsets %s factors %s not reproduced", system.name, offsets, factors)
        raise RewriteVerificationError(
            f"rewritten {system.name} does not reproduce offsets {offsets} and factors {factors}: "
            f"{verdict.first_divergence.description}", verdict)
    logger.info("%s: offsets %s factors %s", system.name, offsets, factors)
    return TransformResult(original=system, system=candidate, offsets=offsets, factors=factors,
                           rewrites=tuple(rewrites), normalizers=tuple(n for n, _ in normalizers),
                           notes=tuple(verdict.notes), verdict=verdict)
