"""Regular expressions over the singleton alphabet {a}.

A guard denotes a set of spike counts. Membership is decided on the
expression tree by a table over (subexpression, count); the normal form is
the finite set of arithmetic progressions read off the unary automaton.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, NamedTuple, Set, Tuple, Union as TypingUnion

from .errors import GuardSyntaxError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Empty:
    """The empty string, lambda. Denotes {0}."""


@dataclass(frozen=True)
class Spike:
    """The symbol a. Denotes {1}."""


@dataclass(frozen=True)
class Union:
    left: "GuardNode"
    right: "GuardNode"


@dataclass(frozen=True)
class Concat:
    left: "GuardNode"
    right: "GuardNode"


@dataclass(frozen=True)
class Plus:
    child: "GuardNode"


GuardNode = TypingUnion[Empty, Spike, Union, Concat, Plus]

EMPTY = Empty()
SPIKE = Spike()


def power(node: GuardNode, n: int) -> GuardNode:
    """n-fold concatenation; power(node, 0) is lambda."""
    if n < 0:
        raise ValueError("negative exponent")
    if n == 0:
        return EMPTY
    result = node
    for _ in range(n - 1):
        result = Concat(result, node)
    return result


def star(node: GuardNode) -> GuardNode:
    return Union(Plus(node), EMPTY)


class Progression(NamedTuple):
    """{offset + n*period : n >= 0}; period 0 is the singleton {offset}."""

    offset: int
    period: int

    def contains(self, k: int) -> bool:
        if self.period == 0:
            return k == self.offset
        return k >= self.offset and (k - self.offset) % self.period == 0


# ---------------------------------------------------------------------------
# Parsing
#
# union   := concat (('|' | '∪') concat)*
# concat  := postfix postfix*
# postfix := atom ('+' | '*' | '^' (INT | '+' | '*'))*
# atom    := 'a' | 'λ' | 'lambda' | '(' union ')'


class _Token(NamedTuple):
    kind: str
    value: str
    position: int


def _tokenize(text: str) -> List[_Token]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif text.startswith("lambda", i):
            tokens.append(_Token("lambda", "lambda", i))
            i += len("lambda")
        elif ch == "λ":
            tokens.append(_Token("lambda", ch, i))
            i += 1
        elif ch == "a":
            tokens.append(_Token("a", ch, i))
            i += 1
        elif ch.isdigit():
            start = i
            while i < len(text) and text[i].isdigit():
                i += 1
            tokens.append(_Token("int", text[start:i], start))
        elif ch in "()|+*^∪":
            tokens.append(_Token("|" if ch == "∪" else ch, ch, i))
            i += 1
        else:
            raise GuardSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(_Token("end", "", len(text)))
    return tokens


class _GuardParser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.index = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        token = self.tokens[self.index]
        self.index += 1
        return token

    def expect(self, kind: str) -> _Token:
        if self.current.kind != kind:
            raise GuardSyntaxError(f"expected {kind!r}, found {self.current.value or 'end of guard'!r}",
                                   self.current.position)
        return self.advance()

    def parse(self) -> GuardNode:
        node = self.parse_union()
        if self.current.kind != "end":
            raise GuardSyntaxError(f"unexpected {self.current.value!r}", self.current.position)
        return node

    def parse_union(self) -> GuardNode:
        node = self.parse_concat()
        while self.current.kind == "|":
            self.advance()
            node = Union(node, self.parse_concat())
        return node

    def parse_concat(self) -> GuardNode:
        if self.current.kind not in ("a", "lambda", "("):
            raise GuardSyntaxError(f"expected a guard term, found {self.current.value or 'end of guard'!r}",
                                   self.current.position)
        node = self.parse_postfix()
        while self.current.kind in ("a", "lambda", "("):
            node = Concat(node, self.parse_postfix())
        return node

    def parse_postfix(self) -> GuardNode:
        node = self.parse_atom()
        while True:
            kind = self.current.kind
            if kind == "+":
                self.advance()
                node = Plus(node)
            elif kind == "*":
                self.advance()
                node = star(node)
            elif kind == "^":
                self.advance()
                exponent = self.advance()
                if exponent.kind == "int":
                    node = power(node, int(exponent.value))
                elif exponent.kind == "+":
                    node = Plus(node)
                elif exponent.kind == "*":
                    node = star(node)
                else:
                    raise GuardSyntaxError("expected an integer, '+' or '*' after '^'", exponent.position)
            else:
                return node

    def parse_atom(self) -> GuardNode:
        token = self.advance()
        if token.kind == "a":
            return SPIKE
        if token.kind == "lambda":
            return EMPTY
        if token.kind == "(":
            node = self.parse_union()
            self.expect(")")
            return node
        raise GuardSyntaxError(f"unexpected {token.value or 'end of guard'!r}", token.position)


def parse_guard(text: str) -> GuardNode:
    return _GuardParser(text).parse()


# ---------------------------------------------------------------------------
# Rendering


def _flatten_concat(node: GuardNode) -> List[GuardNode]:
    if isinstance(node, Concat):
        return _flatten_concat(node.left) + _flatten_concat(node.right)
    return [node]


def _atom(node: GuardNode) -> str:
    text = render_guard(node)
    if isinstance(node, (Empty, Spike)):
        return text
    return f"({text})"


def render_guard(node: GuardNode) -> str:
    if isinstance(node, Empty):
        return "lambda"
    if isinstance(node, Spike):
        return "a"
    if isinstance(node, Plus):
        return f"{_atom(node.child)}^+"
    if isinstance(node, Union):
        if isinstance(node.left, Plus) and isinstance(node.right, Empty):
            return f"{_atom(node.left.child)}^*"
        return f"{render_guard(node.left)} | {render_guard(node.right)}"
    # concatenation: group runs of equal factors into powers
    parts = []
    items = _flatten_concat(node)
    i = 0
    while i < len(items):
        j = i
        while j < len(items) and items[j] == items[i]:
            j += 1
        run = j - i
        item = items[i]
        if isinstance(item, (Union, Concat)):
            text = f"({render_guard(item)})"
        elif isinstance(item, Plus):
            text = f"({render_guard(item)})" if run > 1 else render_guard(item)
        else:
            text = render_guard(item)
        parts.append(f"{text}^{run}" if run > 1 else text)
        i = j
    return "".join(parts)


# ---------------------------------------------------------------------------
# Membership


def _expression(guard) -> GuardNode:
    return getattr(guard, "expression", guard)


def _table(node: GuardNode, limit: int, memo: Dict[int, List[bool]]) -> List[bool]:
    cached = memo.get(id(node))
    if cached is not None:
        return cached
    if isinstance(node, Empty):
        row = [c == 0 for c in range(limit + 1)]
    elif isinstance(node, Spike):
        row = [c == 1 for c in range(limit + 1)]
    elif isinstance(node, Union):
        left = _table(node.left, limit, memo)
        right = _table(node.right, limit, memo)
        row = [l or r for l, r in zip(left, right)]
    elif isinstance(node, Concat):
        left = _table(node.left, limit, memo)
        right = _table(node.right, limit, memo)
        hits = [j for j, member in enumerate(left) if member]
        row = [any(right[c - j] for j in hits if j <= c) for c in range(limit + 1)]
    elif isinstance(node, Plus):
        child = _table(node.child, limit, memo)
        parts = [j for j, member in enumerate(child) if member and j > 0]
        row = [False] * (limit + 1)
        for c in range(limit + 1):
            # a zero-length part never changes the count, so only positive parts split c
            row[c] = child[c] or any(row[c - j] for j in parts if j < c)
    else:
        raise TypeError(f"not a guard node: {node!r}")
    memo[id(node)] = row
    return row


@lru_cache(maxsize=512)
def _cached_table(node: GuardNode, limit: int) -> Tuple[bool, ...]:
    return tuple(_table(node, limit, {}))


def membership_table(guard, limit: int) -> Tuple[bool, ...]:
    """Membership of every count 0..limit."""
    return _cached_table(_expression(guard), limit)[: limit + 1]


TABLE_LIMIT = 1024


def guard_contains(guard, k: int) -> bool:
    """True iff a^k is in L(guard).

    Decided on the expression tree up to TABLE_LIMIT; larger counts go
    through the progression normal form.
    """
    if k < 0:
        return False
    if k > TABLE_LIMIT:
        return progressions_contain(normalize_guard(guard), k)
    limit = max(64, 1 << k.bit_length())
    return _cached_table(_expression(guard), limit)[k]


# ---------------------------------------------------------------------------
# Normal form


class _UnaryNfa:
    def __init__(self):
        self.epsilon: List[List[int]] = []
        self.moves: List[List[int]] = []

    def state(self) -> int:
        self.epsilon.append([])
        self.moves.append([])
        return len(self.epsilon) - 1

    def build(self, node: GuardNode) -> Tuple[int, int]:
        start, end = self.state(), self.state()
        if isinstance(node, Empty):
            self.epsilon[start].append(end)
        elif isinstance(node, Spike):
            self.moves[start].append(end)
        elif isinstance(node, Union):
            for part in (node.left, node.right):
                s, e = self.build(part)
                self.epsilon[start].append(s)
                self.epsilon[e].append(end)
        elif isinstance(node, Concat):
            ls, le = self.build(node.left)
            rs, re_ = self.build(node.right)
            self.epsilon[start].append(ls)
            self.epsilon[le].append(rs)
            self.epsilon[re_].append(end)
        elif isinstance(node, Plus):
            s, e = self.build(node.child)
            self.epsilon[start].append(s)
            self.epsilon[e].append(s)
            self.epsilon[e].append(end)
        else:
            raise TypeError(f"not a guard node: {node!r}")
        return start, end

    def closure(self, states: Iterable[int]) -> FrozenSet[int]:
        seen: Set[int] = set(states)
        stack = list(seen)
        while stack:
            for target in self.epsilon[stack.pop()]:
                if target not in seen:
                    seen.add(target)
                    stack.append(target)
        return frozenset(seen)

    def step(self, states: FrozenSet[int]) -> FrozenSet[int]:
        return self.closure(t for s in states for t in self.moves[s])


def _lasso(node: GuardNode) -> Tuple[int, List[bool]]:
    """Acceptance bits of the subset automaton until its first repeated state.

    Returns (loop_start, bits); counts >= len(bits) repeat bits[loop_start:].
    """
    nfa = _UnaryNfa()
    start, accept = nfa.build(node)
    current = nfa.closure([start])
    seen: Dict[FrozenSet[int], int] = {}
    bits: List[bool] = []
    while current not in seen:
        seen[current] = len(bits)
        bits.append(accept in current)
        current = nfa.step(current)
    return seen[current], bits


def normalize_guard(guard) -> FrozenSet[Progression]:
    """Finite set of progressions whose union is the guard's denoted set."""
    loop_start, bits = _lasso(_expression(guard))
    period = len(bits) - loop_start

    def member(k: int) -> bool:
        if k < len(bits):
            return bits[k]
        return bits[loop_start + (k - loop_start) % period]

    minimal = next(q for q in range(1, period + 1)
                   if period % q == 0
                   and all(member(k) == member(k + q) for k in range(loop_start, loop_start + period)))
    threshold = loop_start
    while threshold > 0 and member(threshold - 1) == member(threshold - 1 + minimal):
        threshold -= 1
    progressions = {Progression(k, 0) for k in range(threshold) if member(k)}
    progressions |= {Progression(r, minimal) for r in range(threshold, threshold + minimal) if member(r)}
    logger.debug("normalized %s: threshold=%d period=%d -> %s",
                 render_guard(_expression(guard)), threshold, minimal, sorted(progressions))
    return frozenset(progressions)


def progressions_contain(progressions: Iterable[Progression], k: int) -> bool:
    return any(p.contains(k) for p in progressions)
