import logging
from enum import Enum
from typing import Dict, List, Optional, Set, Tuple

import networkx as nx
from pydantic import BaseModel, ConfigDict

from .models import SystemDescription

logger = logging.getLogger(__name__)


class ViolationKind(str, Enum):
    MULTI_RULE = "multi-rule"
    NO_RULE_NON_SINK = "no-rule-non-sink"
    SOURCE_INCOMING = "source-incoming"
    SINK_OUTGOING = "sink-outgoing"
    UNDECLARED_SINK = "undeclared-sink"
    INITIAL_SPIKES = "initial-spikes"
    LOST_SPIKE_RISK = "lost-spike-risk"
    DELAYED_FORGETTING = "delayed-forgetting"


BLOCKING_KINDS = frozenset({
    ViolationKind.MULTI_RULE,
    ViolationKind.INITIAL_SPIKES,
    ViolationKind.LOST_SPIKE_RISK,
    ViolationKind.DELAYED_FORGETTING,
})


class Violation(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: ViolationKind
    message: str
    neurons: Tuple[str, ...] = ()
    synapse: Optional[Tuple[str, str]] = None

    @property
    def blocking(self) -> bool:
        """Whether transform refuses a system carrying this violation."""
        return self.kind in BLOCKING_KINDS

    def to_dict(self) -> Dict:
        return {
            "kind": self.kind.value,
            "message": self.message,
            "neurons": list(self.neurons),
            "synapse": list(self.synapse) if self.synapse else None,
            "blocking": self.blocking,
        }


class ValidationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def blocking(self) -> List[Violation]:
        return [v for v in self.violations if v.blocking]

    def of_kind(self, kind: ViolationKind) -> List[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def lines(self) -> List[str]:
        if not self.violations:
            return ["restricted class: ok"]
        return [f"{'error' if v.blocking else 'warning'}: {v.kind.value}: {v.message}" for v in self.violations]

    def to_dict(self) -> Dict:
        return {"ok": self.ok, "violations": [v.to_dict() for v in self.violations]}


def to_digraph(system: SystemDescription) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(system.neuron_ids)
    graph.add_edges_from(system.synapses)
    return graph


def cycle_members(graph: nx.DiGraph) -> Set[str]:
    members: Set[str] = set()
    for component in nx.strongly_connected_components(graph):
        if len(component) > 1:
            members |= component
    return members


def on_common_cycle(graph: nx.DiGraph, source: str, target: str) -> bool:
    for component in nx.strongly_connected_components(graph):
        if source in component:
            return target in component and len(component) > 1
    return False


def repeated_spikers(system: SystemDescription, graph: Optional[nx.DiGraph] = None) -> Set[str]:
    """Neurons that may spike more than once over a run.

    Least fixpoint of: on a cycle, preloaded with at least two firings,
    fed by a repeated spiker, or collecting more batches than one firing consumes.
    """
    graph = graph if graph is not None else to_digraph(system)
    repeated = set(cycle_members(graph))
    changed = True
    while changed:
        changed = False
        for neuron in system.neurons:
            if neuron.id in repeated or not neuron.rules:
                continue
            consumed = min(rule.consumed for rule in neuron.rules)
            predecessors = list(graph.predecessors(neuron.id))
            if (neuron.initial_spikes >= 2 * consumed
                    or any(p in repeated for p in predecessors)
                    or (len(predecessors) >= 2 and consumed < len(predecessors))):
                repeated.add(neuron.id)
                changed = True
    return repeated


def validate_restricted(system: SystemDescription) -> ValidationReport:
    graph = to_digraph(system)
    on_cycle = cycle_members(graph)
    sinks = set(system.sinks)
    source = system.source
    violations: List[Violation] = []

    for neuron in system.neurons:
        if len(neuron.rules) > 1:
            violations.append(Violation(kind=ViolationKind.MULTI_RULE,
                                        message=f"neuron {neuron.id} has {len(neuron.rules)} rules",
                                        neurons=(neuron.id,)))
        elif not neuron.rules and neuron.id not in sinks:
            violations.append(Violation(kind=ViolationKind.NO_RULE_NON_SINK,
                                        message=f"neuron {neuron.id} has no rule but is not a sink",
                                        neurons=(neuron.id,)))
        for rule in neuron.rules:
            if rule.is_forgetting and rule.delay:
                violations.append(Violation(kind=ViolationKind.DELAYED_FORGETTING,
                                            message=f"neuron {neuron.id} forgets with delay {rule.delay}",
                                            neurons=(neuron.id,)))

    if source is None:
        violations.append(Violation(kind=ViolationKind.SOURCE_INCOMING,
                                    message="no single neuron without incoming synapses to act as source"))
    elif graph.in_degree(source) and source not in on_cycle:
        violations.append(Violation(kind=ViolationKind.SOURCE_INCOMING,
                                    message=f"source {source} has incoming synapses",
                                    neurons=(source,)))

    if not sinks:
        violations.append(Violation(kind=ViolationKind.UNDECLARED_SINK,
                                    message="no sink declared and every neuron has outgoing synapses"))
    for sink in system.sinks:
        if graph.out_degree(sink):
            violations.append(Violation(kind=ViolationKind.SINK_OUTGOING,
                                        message=f"sink {sink} has outgoing synapses",
                                        neurons=(sink,)))

    loaded = [n for n in system.neurons if n.initial_spikes]
    if source is not None and (system.neuron(source).initial_spikes != 1
                               or any(n.id != source for n in loaded)):
        placement = ", ".join(f"{n.id}={n.initial_spikes}" for n in loaded) or "none"
        violations.append(Violation(kind=ViolationKind.INITIAL_SPIKES,
                                    message=f"expected exactly one spike at source {source}, found {placement}",
                                    neurons=tuple(n.id for n in loaded)))

    delays = system.delays
    repeated = repeated_spikers(system, graph)
    for source_id, target_id in system.synapses:
        if source_id in on_cycle and target_id in on_cycle and on_common_cycle(graph, source_id, target_id):
            continue
        if delays[source_id] >= delays[target_id]:
            continue
        # an undelayed neuron that fires once cannot catch a closed successor
        if source_id in repeated:
            message = (f"{source_id} (d={delays[source_id]}) may spike again while "
                       f"{target_id} (d={delays[target_id]}) is closed")
        elif delays[source_id]:
            message = (f"{source_id} (d={delays[source_id]}) feeds the slower "
                       f"{target_id} (d={delays[target_id]})")
        else:
            continue
        violations.append(Violation(kind=ViolationKind.LOST_SPIKE_RISK, message=message,
                                    neurons=(source_id, target_id), synapse=(source_id, target_id)))

    report = ValidationReport(violations=tuple(violations))
    logger.debug("validated %s: %s", system.name, [v.kind.value for v in report.violations])
    return report
