import logging

import networkx as nx

from .models import SystemDescription

logger = logging.getLogger(__name__)


def _label(parts) -> str:
    # pre-quoted so pydot keeps the rule text verbatim
    escaped = "\\n".join(part.replace('"', '\\"') for part in parts)
    return f'"{escaped}"'


def to_graph(system: SystemDescription) -> nx.DiGraph:
    """Topology with DOT attributes: neurons labelled with spikes and rules."""
    graph = nx.DiGraph(name=system.name)
    sinks = set(system.sinks)
    for neuron in system.neurons:
        parts = [neuron.id]
        if neuron.initial_spikes:
            parts.append(f"spikes={neuron.initial_spikes}")
        parts.extend(rule.text for rule in neuron.rules)
        attributes = {"label": _label(parts), "shape": "box" if neuron.id == system.source else "ellipse"}
        if neuron.id in sinks:
            attributes["peripheries"] = "2"
        graph.add_node(neuron.id, **attributes)
    graph.add_edges_from(system.synapses)
    return graph


def export_dot(system: SystemDescription) -> str:
    graph = to_graph(system)
    text = nx.nx_pydot.to_pydot(graph).to_string()
    logger.debug("exported %s: %d nodes, %d edges", system.name, graph.number_of_nodes(), graph.number_of_edges())
    return text
