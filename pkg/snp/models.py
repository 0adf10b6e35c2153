from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, model_validator

from .errors import GuardSyntaxError, SystemStructureError
from .guards import Progression, guard_contains, normalize_guard, parse_guard, progressions_contain


class UnaryGuard(BaseModel):
    """Regular expression E over {a}. `text` is kept verbatim for serialization."""

    model_config = ConfigDict(frozen=True)

    text: str
    expression: Any
    progressions: Tuple[Progression, ...]

    @classmethod
    def parse(cls, text: str) -> "UnaryGuard":
        text = text.strip()
        expression = parse_guard(text)
        return cls(text=text, expression=expression,
                   progressions=tuple(sorted(normalize_guard(expression))))

    def contains(self, k: int) -> bool:
        return progressions_contain(self.progressions, k)

    def contains_by_expression(self, k: int) -> bool:
        return guard_contains(self.expression, k)

    def singleton(self) -> Optional[int]:
        """The only count denoted, if the guard denotes exactly one."""
        if len(self.progressions) == 1 and self.progressions[0].period == 0:
            return self.progressions[0].offset
        return None

    def __str__(self) -> str:
        return self.text


def _spike_count(text: str, what: str) -> int:
    """'a' -> 1, 'a^3' -> 3, 'lambda' -> 0; any singleton guard is accepted."""
    try:
        progressions = normalize_guard(parse_guard(text.strip()))
    except GuardSyntaxError as exc:
        raise GuardSyntaxError(f"bad {what} {text.strip()!r}: {exc.message}", exc.position) from exc
    if len(progressions) != 1 or next(iter(progressions)).period != 0:
        raise SystemStructureError(f"{what} {text.strip()!r} must denote a single spike count")
    return next(iter(progressions)).offset


def _render_count(n: int) -> str:
    if n == 0:
        return "lambda"
    if n == 1:
        return "a"
    return f"a^{n}"


class Rule(BaseModel):
    """E/a^c -> a^b; d"""

    model_config = ConfigDict(frozen=True)

    guard: UnaryGuard
    consumed: int
    produced: int
    delay: int = 0

    @model_validator(mode="after")
    def _check_counts(self) -> "Rule":
        if self.consumed < 1:
            raise SystemStructureError(f"rule '{self.text}' consumes {self.consumed} spikes; at least 1 is required")
        if self.produced < 0 or self.delay < 0:
            raise SystemStructureError(f"rule '{self.text}' has a negative count or delay")
        if self.consumed < self.produced:
            raise SystemStructureError(
                f"rule '{self.text}' produces {self.produced} spikes but consumes only {self.consumed}")
        return self

    @classmethod
    def parse(cls, text: str) -> "Rule":
        head, arrow, tail = text.partition("->")
        if not arrow:
            raise GuardSyntaxError(f"rule {text.strip()!r} has no '->'", len(text))
        tail, _, delay_text = tail.partition(";")
        guard_text, slash, consumed_text = head.partition("/")
        guard = UnaryGuard.parse(guard_text)
        if slash:
            consumed = _spike_count(consumed_text, "consumed count")
        else:
            consumed = guard.singleton()
            if consumed is None:
                raise SystemStructureError(
                    f"guard {guard.text!r} denotes several counts; write it as E/a^c -> ...")
        produced = _spike_count(tail, "produced count")
        delay_text = delay_text.strip()
        if delay_text and not delay_text.isdigit():
            raise GuardSyntaxError(f"delay {delay_text!r} is not a non-negative integer",
                                   text.index(";") + 1)
        return cls(guard=guard, consumed=consumed, produced=produced,
                   delay=int(delay_text) if delay_text else 0)

    @property
    def is_forgetting(self) -> bool:
        return self.produced == 0

    @property
    def text(self) -> str:
        head = self.guard.text
        if self.guard.singleton() != self.consumed:
            head += "/a" if self.consumed == 1 else f"/a^{self.consumed}"
        rendered = f"{head} -> {_render_count(self.produced)}"
        if self.delay:
            rendered += f"; {self.delay}"
        return rendered

    def applicable(self, spikes: int) -> bool:
        """a^k in L(E) and k >= c."""
        return spikes >= self.consumed and self.guard.contains(spikes)

    def __str__(self) -> str:
        return self.text


class Neuron(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: str
    initial_spikes: int = 0
    rules: Tuple[Rule, ...] = ()

    @model_validator(mode="after")
    def _check_spikes(self) -> "Neuron":
        if self.initial_spikes < 0:
            raise SystemStructureError(f"neuron {self.id} has negative initial spikes")
        return self

    @property
    def max_delay(self) -> int:
        return max((rule.delay for rule in self.rules), default=0)

    @property
    def rule(self) -> Optional[Rule]:
        """The rule of a single-rule neuron."""
        return self.rules[0] if len(self.rules) == 1 else None

    def to_dict(self) -> Dict:
        return {
            "id": self.id,
            "initial_spikes": self.initial_spikes,
            "rules": [rule.text for rule in self.rules],
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "Neuron":
        return cls(
            id=data["id"],
            initial_spikes=data.get("initial_spikes", 0),
            rules=tuple(Rule.parse(text) for text in data.get("rules", [])),
        )


def relay(neuron_id: str, initial_spikes: int = 0) -> Neuron:
    return Neuron(id=neuron_id, initial_spikes=initial_spikes, rules=(Rule.parse("a -> a"),))


def reservoir(neuron_id: str, spikes: int) -> Neuron:
    """Releases one spike per step for `spikes` steps."""
    return Neuron(id=neuron_id, initial_spikes=spikes, rules=(Rule.parse("a^+/a -> a"),))


def primed_reservoir(neuron_id: str, spikes: int) -> Neuron:
    """Holds 2*spikes - 1; one trigger spike starts a release of one spike per step for `spikes` steps."""
    return Neuron(id=neuron_id, initial_spikes=2 * spikes - 1, rules=(Rule.parse("(a^2)^+/a^2 -> a"),))


def accumulator(neuron_id: str, count: int, initial_spikes: int = 0) -> Neuron:
    """Fires once every `count` received spikes."""
    guard = "a" if count == 1 else f"a^{count}"
    return Neuron(id=neuron_id, initial_spikes=initial_spikes, rules=(Rule.parse(f"{guard} -> a"),))


Synapse = Tuple[str, str]


class SystemDescription(BaseModel):
    """Static network: neurons in declaration order, synapses, declared source and sinks."""

    model_config = ConfigDict(frozen=True)

    name: str = "system"
    neurons: Tuple[Neuron, ...]
    synapses: Tuple[Synapse, ...] = ()
    declared_source: Optional[str] = None
    declared_sinks: Tuple[str, ...] = ()

    @model_validator(mode="after")
    def _check_structure(self) -> "SystemDescription":
        if not self.neurons:
            raise SystemStructureError("a system needs at least one neuron")
        ids = set()
        for neuron in self.neurons:
            if neuron.id in ids:
                raise SystemStructureError(f"duplicate neuron id {neuron.id}")
            ids.add(neuron.id)
        seen = set()
        for source, target in self.synapses:
            for endpoint in (source, target):
                if endpoint not in ids:
                    raise SystemStructureError(f"synapse {source} -> {target} names unknown neuron {endpoint}")
            if source == target:
                raise SystemStructureError(f"self-loop synapse {source} -> {target}")
            if (source, target) in seen:
                raise SystemStructureError(f"duplicate synapse {source} -> {target}")
            seen.add((source, target))
        for declared in (self.declared_source, *self.declared_sinks):
            if declared is not None and declared not in ids:
                raise SystemStructureError(f"declared source/sink {declared} is not a neuron")
        if len(set(self.declared_sinks)) != len(self.declared_sinks):
            raise SystemStructureError("a sink is declared twice")
        return self

    @property
    def index(self) -> Dict[str, int]:
        return {neuron.id: i for i, neuron in enumerate(self.neurons)}

    def adjacency(self) -> Tuple[Dict[str, List[str]], Dict[str, List[str]]]:
        """(outgoing, incoming) neighbour lists in synapse declaration order."""
        outgoing: Dict[str, List[str]] = {n.id: [] for n in self.neurons}
        incoming: Dict[str, List[str]] = {n.id: [] for n in self.neurons}
        for source, target in self.synapses:
            outgoing[source].append(target)
            incoming[target].append(source)
        return outgoing, incoming

    def neuron(self, neuron_id: str) -> Neuron:
        try:
            return self.neurons[self.index[neuron_id]]
        except KeyError:
            raise SystemStructureError(f"unknown neuron {neuron_id}") from None

    def successors(self, neuron_id: str) -> List[str]:
        """Out-neighbours in synapse declaration order."""
        return [target for source, target in self.synapses if source == neuron_id]

    def predecessors(self, neuron_id: str) -> List[str]:
        return [source for source, target in self.synapses if target == neuron_id]

    @property
    def neuron_ids(self) -> List[str]:
        return [neuron.id for neuron in self.neurons]

    @property
    def source(self) -> Optional[str]:
        """Declared source, else the unique neuron without incoming synapses."""
        if self.declared_source is not None:
            return self.declared_source
        candidates = [n.id for n in self.neurons if not self.predecessors(n.id)]
        return candidates[0] if len(candidates) == 1 else None

    @property
    def sinks(self) -> Tuple[str, ...]:
        """Declared sinks, else every neuron without outgoing synapses."""
        if self.declared_sinks:
            return self.declared_sinks
        return tuple(n.id for n in self.neurons if not self.successors(n.id))

    @property
    def delays(self) -> Dict[str, int]:
        return {neuron.id: neuron.max_delay for neuron in self.neurons}

    @property
    def total_delay(self) -> int:
        return sum(rule.delay for neuron in self.neurons for rule in neuron.rules)

    @property
    def max_delay(self) -> int:
        return max((neuron.max_delay for neuron in self.neurons), default=0)

    @property
    def has_delays(self) -> bool:
        return self.max_delay > 0

    def default_horizon(self) -> int:
        return 10 * (1 + self.total_delay) * len(self.neurons)

    def to_dict(self) -> Dict:
        return {
            "name": self.name,
            "neurons": [neuron.to_dict() for neuron in self.neurons],
            "synapses": [list(synapse) for synapse in self.synapses],
            "source": self.declared_source,
            "sinks": list(self.declared_sinks),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> "SystemDescription":
        return cls(
            name=data.get("name", "system"),
            neurons=tuple(Neuron.from_dict(neuron) for neuron in data["neurons"]),
            synapses=tuple((source, target) for source, target in data.get("synapses", [])),
            declared_source=data.get("source"),
            declared_sinks=tuple(data.get("sinks", [])),
        )
