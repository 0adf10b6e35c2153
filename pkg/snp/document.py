"""Line-oriented system documents.

    # comment
    system walkthrough
    param x = 5
    neuron s1 spikes=${x}
      rule "a^+/a -> a; 2"
    neuron s2
      rule "a -> a"
    neuron s3
    synapse s1 -> s2
    synapse s2 -> s3
    source s1
    sink s3

`${name}` placeholders are substituted from `param` defaults and caller
overrides before any other line is read.
"""

import logging
import re
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from .errors import DocumentSyntaxError, GuardSyntaxError, SystemStructureError
from .models import Neuron, Rule, SystemDescription

logger = logging.getLogger(__name__)

_IDENT = r"[\w.\-]+"
_PARAM = re.compile(rf"^param\s+({_IDENT})\s*=\s*(-?\d+)\s*$")
_PLACEHOLDER = re.compile(r"\$\{([^}]*)\}")
_SYSTEM = re.compile(rf"^system\s+({_IDENT})\s*$")
_NEURON = re.compile(rf"^neuron\s+({_IDENT})(?:\s+spikes\s*=\s*(\d+))?\s*$")
_RULE = re.compile(r'^rule\s+"([^"]*)"\s*$')
_SYNAPSE = re.compile(rf"^synapse\s+({_IDENT})\s*->\s*({_IDENT})\s*$")
_ENDPOINT = re.compile(rf"^(source|sink)\s+({_IDENT})\s*$")


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _parameters(lines: List[str], overrides: Mapping[str, int]) -> Dict[str, int]:
    params: Dict[str, int] = {}
    for number, raw in enumerate(lines, start=1):
        line = _strip_comment(raw).strip()
        if line.startswith("param"):
            match = _PARAM.match(line)
            if not match:
                raise DocumentSyntaxError("expected 'param <name> = <int>'", number, 1)
            params[match.group(1)] = int(match.group(2))
    params.update(overrides)
    return params


def _substitute(line: str, number: int, params: Mapping[str, int]) -> str:
    def replace(match: re.Match) -> str:
        name = match.group(1)
        if name not in params:
            raise DocumentSyntaxError(f"unknown parameter ${{{name}}}", number, match.start() + 1)
        return str(params[name])

    return _PLACEHOLDER.sub(replace, line)


def declared_parameters(text: str) -> Dict[str, int]:
    """`param` defaults of a document, without overrides."""
    return _parameters(text.splitlines(), {})


def parse_system(text: str, overrides: Optional[Mapping[str, int]] = None,
                 name: Optional[str] = None) -> SystemDescription:
    lines = text.splitlines()
    params = _parameters(lines, overrides or {})

    system_name = name or "system"
    neurons: List[Tuple[str, int, List[Rule]]] = []
    declared: Dict[str, int] = {}
    synapses: List[Tuple[str, str, int]] = []
    source: Optional[str] = None
    sinks: List[str] = []

    for number, raw in enumerate(lines, start=1):
        stripped = _strip_comment(raw)
        line = stripped.strip()
        if not line or line.startswith("param"):
            continue
        line = _substitute(line, number, params)
        indent = len(stripped) - len(stripped.lstrip()) + 1
        keyword = line.split(None, 1)[0]

        if keyword == "system":
            match = _SYSTEM.match(line)
            if not match:
                raise DocumentSyntaxError("expected 'system <name>'", number, indent)
            system_name = match.group(1)
        elif keyword == "neuron":
            match = _NEURON.match(line)
            if not match:
                raise DocumentSyntaxError("expected 'neuron <id> [spikes=<n>]'", number, indent)
            neuron_id = match.group(1)
            if neuron_id in declared:
                raise SystemStructureError(f"line {number}: duplicate neuron id {neuron_id}")
            declared[neuron_id] = number
            neurons.append((neuron_id, int(match.group(2) or 0), []))
        elif keyword == "rule":
            match = _RULE.match(line)
            if not match:
                raise DocumentSyntaxError('expected rule "<guard> -> <produced>[; <delay>]"', number, indent)
            if not neurons:
                raise DocumentSyntaxError("rule before any neuron", number, indent)
            column = indent + line.index('"') + 1
            try:
                neurons[-1][2].append(Rule.parse(match.group(1)))
            except GuardSyntaxError as exc:
                raise DocumentSyntaxError(exc.message, number, column + exc.position) from exc
            except SystemStructureError as exc:
                raise SystemStructureError(f"line {number}: {exc}") from exc
        elif keyword == "synapse":
            match = _SYNAPSE.match(line)
            if not match:
                raise DocumentSyntaxError("expected 'synapse <id> -> <id>'", number, indent)
            synapses.append((match.group(1), match.group(2), number))
        elif keyword in ("source", "sink"):
            match = _ENDPOINT.match(line)
            if not match:
                raise DocumentSyntaxError(f"expected '{keyword} <id>'", number, indent)
            if keyword == "source":
                if source is not None:
                    raise SystemStructureError(f"line {number}: source declared twice")
                source = match.group(2)
            else:
                sinks.append(match.group(2))
        else:
            raise DocumentSyntaxError(f"unknown keyword {keyword!r}", number, indent)

    for source_id, target_id, number in synapses:
        for endpoint in (source_id, target_id):
            if endpoint not in declared:
                raise SystemStructureError(f"line {number}: synapse names unknown neuron {endpoint}")
        if source_id == target_id:
            raise SystemStructureError(f"line {number}: self-loop synapse {source_id} -> {target_id}")

    system = SystemDescription(
        name=system_name,
        neurons=tuple(Neuron(id=i, initial_spikes=spikes, rules=tuple(rules)) for i, spikes, rules in neurons),
        synapses=tuple((s, t) for s, t, _ in synapses),
        declared_source=source,
        declared_sinks=tuple(sinks),
    )
    logger.debug("parsed %s: %d neurons, %d synapses", system.name, len(system.neurons), len(system.synapses))
    return system


def load_system(path, overrides: Optional[Mapping[str, int]] = None) -> SystemDescription:
    path = Path(path)
    return parse_system(path.read_text(encoding="utf-8"), overrides, name=path.stem)


def render_system(system: SystemDescription) -> str:
    """Deterministic document text; parse_system(render_system(s)) == s."""
    out = [f"system {system.name}"]
    for neuron in system.neurons:
        header = f"neuron {neuron.id}"
        if neuron.initial_spikes:
            header += f" spikes={neuron.initial_spikes}"
        out.append(header)
        out.extend(f'  rule "{rule.text}"' for rule in neuron.rules)
    out.extend(f"synapse {source} -> {target}" for source, target in system.synapses)
    if system.declared_source is not None:
        out.append(f"source {system.declared_source}")
    out.extend(f"sink {sink}" for sink in system.declared_sinks)
    return "\n".join(out) + "\n"


def parse_assignments(items) -> Dict[str, int]:
    """['d=3', 'x=5'] -> {'d': 3, 'x': 5}"""
    values = {}
    for item in items or ():
        name, sep, value = item.partition("=")
        name, value = name.strip(), value.strip()
        if not sep or not name or not value.lstrip("-").isdigit():
            raise DocumentSyntaxError(f"expected <name>=<int>, got {item!r}")
        values[name] = int(value)
    return values
