"""Spiking neural P systems: simulation, delay elimination and simulation checking."""

from .constructs import Iteration, Join, RoutingGraph, Sequential, Split, classify_constructs
from .document import load_system, parse_system, render_system
from .eliminator import (
    RewriteResult,
    TransformResult,
    compose_offsets,
    eliminate_iteration,
    eliminate_join,
    eliminate_sequential,
    eliminate_split,
    make_normalizer,
    transform,
)
from .equivalence import EquivalenceVerdict, compare, sink_schedule
from .errors import SNPError
from .guards import guard_contains, normalize_guard
from .matrix_engine import build_transition_matrix, matrix_run, matrix_step
from .models import Neuron, Rule, SystemDescription, UnaryGuard
from .simulator import enabled_rule, initial_configuration, lost_spike_count, run, step
from .validation import ValidationReport, validate_restricted

__all__ = [
    "EquivalenceVerdict",
    "Iteration",
    "Join",
    "Neuron",
    "RewriteResult",
    "RoutingGraph",
    "Rule",
    "SNPError",
    "Sequential",
    "Split",
    "SystemDescription",
    "TransformResult",
    "UnaryGuard",
    "ValidationReport",
    "build_transition_matrix",
    "classify_constructs",
    "compare",
    "compose_offsets",
    "eliminate_iteration",
    "eliminate_join",
    "eliminate_sequential",
    "eliminate_split",
    "enabled_rule",
    "guard_contains",
    "initial_configuration",
    "load_system",
    "lost_spike_count",
    "make_normalizer",
    "matrix_run",
    "matrix_step",
    "normalize_guard",
    "parse_system",
    "render_system",
    "run",
    "sink_schedule",
    "step",
    "transform",
    "validate_restricted",
]
