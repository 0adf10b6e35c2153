"""Linear-algebra execution of delay-free systems.

Rows are rules, columns are neurons. For the rule r of neuron j, M[r, j] = -c
and M[r, k] = +b for every synapse (j, k). With s the 0/1 spiking vector of a
configuration C, the next configuration is C + s·M.
"""

import logging
from typing import List, Optional, Tuple

import numpy as np

from .errors import HorizonError, MatrixFormError, NondeterminismError
from .models import Rule, SystemDescription

logger = logging.getLogger(__name__)


class TransitionMatrix:
    def __init__(self, matrix: np.ndarray, rows: List[Tuple[str, int]], columns: List[str], rules: List[Rule]):
        self.matrix = matrix
        self.matrix.setflags(write=False)
        self.rows = rows
        self.columns = columns
        self.rules = rules
        self.owners = [columns.index(neuron) for neuron, _ in rows]

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape

    def row(self, neuron: str, rule: int = 0) -> np.ndarray:
        return self.matrix[self.rows.index((neuron, rule))]

    def dump(self) -> str:
        labels = [f"{neuron}:{rule}" for neuron, rule in self.rows]
        first = max([len(label) for label in labels] + [1])
        width = max([len(c) for c in self.columns] + [len(str(v)) for v in self.matrix.flat] + [1])
        out = [" " * first + " " + " ".join(c.rjust(width) for c in self.columns)]
        for label, values in zip(labels, self.matrix):
            out.append(label.ljust(first) + " " + " ".join(str(v).rjust(width) for v in values))
        return "\n".join(out) + "\n"


def build_transition_matrix(system: SystemDescription) -> TransitionMatrix:
    delayed = [n.id for n in system.neurons if n.max_delay]
    if delayed:
        raise MatrixFormError(f"matrix form covers delay-free systems only; delayed: {', '.join(delayed)}")
    index = system.index
    rows = [(neuron.id, i) for neuron in system.neurons for i, _ in enumerate(neuron.rules)]
    rules = [rule for neuron in system.neurons for rule in neuron.rules]
    matrix = np.zeros((len(rows), len(system.neurons)), dtype=np.int64)
    outgoing, _ = system.adjacency()
    for r, ((neuron_id, _), rule) in enumerate(zip(rows, rules)):
        matrix[r, index[neuron_id]] = -rule.consumed
        for target in outgoing[neuron_id]:
            matrix[r, index[target]] += rule.produced
    return TransitionMatrix(matrix, rows, system.neuron_ids, rules)


def spiking_vector(config: np.ndarray, system: SystemDescription, matrix: TransitionMatrix) -> np.ndarray:
    vector = np.zeros(len(matrix.rows), dtype=np.int64)
    fired = {}
    for r, ((neuron_id, rule_index), rule) in enumerate(zip(matrix.rows, matrix.rules)):
        if rule.applicable(int(config[matrix.owners[r]])):
            if neuron_id in fired:
                raise NondeterminismError(neuron_id, [fired[neuron_id], rule_index])
            fired[neuron_id] = rule_index
            vector[r] = 1
    return vector


def matrix_step(config, system: SystemDescription, matrix: TransitionMatrix) -> np.ndarray:
    config = np.asarray(config, dtype=np.int64)
    if (config < 0).any():
        raise MatrixFormError(f"configuration vector has a negative component: {config.tolist()}")
    return config + spiking_vector(config, system, matrix) @ matrix.matrix


def matrix_run(system: SystemDescription, horizon: Optional[int] = None) -> List[np.ndarray]:
    """Configuration vectors from step 0 until no rule fires or the horizon is reached."""
    horizon = system.default_horizon() if horizon is None else horizon
    if horizon < 1:
        raise HorizonError(f"horizon must be at least 1, got {horizon}")
    matrix = build_transition_matrix(system)
    config = np.array([n.initial_spikes for n in system.neurons], dtype=np.int64)
    trace = [config]
    while len(trace) <= horizon:
        spiking = spiking_vector(config, system, matrix)
        if not spiking.any():
            break
        config = config + spiking @ matrix.matrix
        trace.append(config)
    logger.info("%s: matrix run of %d steps", system.name, len(trace) - 1)
    return trace
