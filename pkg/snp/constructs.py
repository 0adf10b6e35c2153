"""Decomposition of a network into the four routing constructs.

Cycles are found first as strongly connected components (each must be a
single simple cycle), then branch points (splits and joins) on the remaining
synapses, and whatever is still uncovered is cut into maximal chains.
"""

import logging
from typing import Annotated, Dict, FrozenSet, List, Literal, Optional, Set, Tuple, Union

import networkx as nx
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .errors import UnclassifiableTopologyError
from .models import Synapse, SystemDescription
from .validation import to_digraph

logger = logging.getLogger(__name__)


class Sequential(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["sequential"] = "sequential"
    path: Tuple[str, ...]

    @property
    def synapses(self) -> Tuple[Synapse, ...]:
        return tuple(zip(self.path, self.path[1:]))

    @property
    def neurons(self) -> Tuple[str, ...]:
        return self.path

    def describe(self) -> str:
        return f"Sequential({' -> '.join(self.path)})"


class Iteration(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["iteration"] = "iteration"
    cycle: Tuple[str, ...]
    taps: Tuple[str, ...] = ()
    exits: Tuple[Synapse, ...] = ()

    @property
    def synapses(self) -> Tuple[Synapse, ...]:
        ring = tuple(zip(self.cycle, self.cycle[1:] + self.cycle[:1]))
        return ring + self.exits

    @property
    def neurons(self) -> Tuple[str, ...]:
        return self.cycle + self.taps

    def describe(self) -> str:
        taps = f"; taps {', '.join(self.taps)}" if self.taps else ""
        return f"Iteration({' -> '.join(self.cycle)}{taps})"


class Split(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["split"] = "split"
    parent: str
    children: Tuple[str, ...]

    @property
    def synapses(self) -> Tuple[Synapse, ...]:
        return tuple((self.parent, child) for child in self.children)

    @property
    def neurons(self) -> Tuple[str, ...]:
        return (self.parent,) + self.children

    def describe(self) -> str:
        return f"Split({self.parent}; {', '.join(self.children)})"


class Join(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Literal["join"] = "join"
    parents: Tuple[str, ...]
    junction: str
    child: Optional[str] = None

    @property
    def synapses(self) -> Tuple[Synapse, ...]:
        edges = tuple((parent, self.junction) for parent in self.parents)
        if self.child is not None:
            edges += ((self.junction, self.child),)
        return edges

    @property
    def neurons(self) -> Tuple[str, ...]:
        return self.parents + (self.junction,) + ((self.child,) if self.child else ())

    def describe(self) -> str:
        child = f"; {self.child}" if self.child else ""
        return f"Join({', '.join(self.parents)}; {self.junction}{child})"


Construct = Union[Sequential, Iteration, Split, Join]


class RoutingGraph(BaseModel):
    """A routing of a base system: selected synapses, their endpoints and the constructs covering them."""

    model_config = ConfigDict(frozen=True)

    base_system: SystemDescription
    selected_synapses: Tuple[Synapse, ...]
    selected_neurons: Tuple[str, ...]
    constructs: Tuple[Annotated[Construct, Field(discriminator="kind")], ...] = ()

    @model_validator(mode="after")
    def _check_selection(self) -> "RoutingGraph":
        base = set(self.base_system.synapses)
        stray = [s for s in self.selected_synapses if s not in base]
        if stray:
            raise UnclassifiableTopologyError("selected synapses are not in the base system", stray)
        endpoints = {n for synapse in self.selected_synapses for n in synapse}
        if set(self.selected_neurons) != endpoints:
            raise UnclassifiableTopologyError("selected neurons must be the endpoints of the selected synapses")
        selected = set(self.selected_synapses)
        for construct in self.constructs:
            outside = [s for s in construct.synapses if s not in selected]
            if outside:
                raise UnclassifiableTopologyError(f"{construct.describe()} leaves the routing", outside)
        return self

    def of_kind(self, kind: str) -> List[Construct]:
        return [c for c in self.constructs if c.kind == kind]

    def covered(self) -> Set[Synapse]:
        return {s for construct in self.constructs for s in construct.synapses}

    def lines(self) -> List[str]:
        return [construct.describe() for construct in self.constructs]

    def to_dict(self) -> Dict:
        return {
            "system": self.base_system.name,
            "synapses": [list(s) for s in self.selected_synapses],
            "neurons": list(self.selected_neurons),
            "constructs": [c.model_dump() for c in self.constructs],
        }


def routing(system: SystemDescription, synapses, constructs=()) -> RoutingGraph:
    """Routing over a subset of synapses, neurons in declaration order."""
    chosen = tuple(s for s in system.synapses if s in set(synapses))
    endpoints = {n for s in chosen for n in s}
    return RoutingGraph(
        base_system=system,
        selected_synapses=chosen,
        selected_neurons=tuple(n for n in system.neuron_ids if n in endpoints),
        constructs=tuple(constructs),
    )


def _order_cycle(system: SystemDescription, graph: nx.DiGraph, component: FrozenSet[str]) -> Tuple[str, ...]:
    order = system.index
    entries = [n for n in component if any(p not in component for p in graph.predecessors(n))]
    if system.source in component:
        start = system.source
    elif entries:
        start = min(entries, key=order.__getitem__)
    else:
        loaded = [n for n in component if system.neuron(n).initial_spikes]
        start = min(loaded or component, key=order.__getitem__)
    cycle = [start]
    while True:
        (following,) = [s for s in graph.successors(cycle[-1]) if s in component]
        if following == start:
            return tuple(cycle)
        cycle.append(following)


def classify_constructs(system: SystemDescription) -> RoutingGraph:
    graph = to_digraph(system)
    order = system.index
    constructs: List[Construct] = []
    on_cycle: Set[str] = set()
    cycle_edges: Set[Synapse] = set()

    components = [c for c in nx.strongly_connected_components(graph) if len(c) > 1]
    components.sort(key=lambda c: min(order[n] for n in c))
    for component in components:
        inner = [(u, v) for u, v in system.synapses if u in component and v in component]
        if len(inner) != len(component):
            raise UnclassifiableTopologyError("strongly connected region is not a single cycle", inner)
        cycle = _order_cycle(system, graph, frozenset(component))
        exits = tuple((n, s) for n in cycle for s in system.successors(n) if s not in component)
        taps = tuple(dict.fromkeys(t for _, t in exits))
        constructs.append(Iteration(cycle=cycle, taps=taps, exits=exits))
        on_cycle |= component
        cycle_edges |= set(inner) | set(exits)

    open_edges = [s for s in system.synapses if s not in cycle_edges]
    out_open: Dict[str, List[str]] = {n: [] for n in system.neuron_ids}
    for u, v in open_edges:
        out_open[u].append(v)

    covered = set(cycle_edges)
    for neuron_id in system.neuron_ids:
        if len(out_open[neuron_id]) >= 2:
            split = Split(parent=neuron_id, children=tuple(out_open[neuron_id]))
            constructs.append(split)
            covered |= set(split.synapses)
    for neuron_id in system.neuron_ids:
        parents = system.predecessors(neuron_id)
        if len(parents) >= 2 and neuron_id not in on_cycle:
            successors = system.successors(neuron_id)
            join = Join(parents=tuple(parents), junction=neuron_id,
                        child=successors[0] if len(successors) == 1 else None)
            constructs.append(join)
            covered |= set(join.synapses)

    residual = [s for s in system.synapses if s not in covered]
    res_in: Dict[str, int] = {n: 0 for n in system.neuron_ids}
    res_out: Dict[str, List[str]] = {n: [] for n in system.neuron_ids}
    for u, v in residual:
        res_in[v] += 1
        res_out[u].append(v)

    def interior(n: str) -> bool:
        return (res_in[n] == 1 and len(res_out[n]) == 1
                and graph.in_degree(n) == 1 and graph.out_degree(n) == 1)

    for u, v in residual:
        if interior(u):
            continue
        path = [u, v]
        while interior(path[-1]):
            path.append(res_out[path[-1]][0])
        constructs.append(Sequential(path=tuple(path)))

    result = routing(system, system.synapses, constructs)
    missing = set(system.synapses) - result.covered()
    if missing:
        raise UnclassifiableTopologyError("synapses not covered by any construct",
                                          [s for s in system.synapses if s in missing])
    for construct in constructs:
        logger.debug("%s: %s", system.name, construct.describe())
    return result
