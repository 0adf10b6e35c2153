import random

import pytest

from snp.errors import GuardSyntaxError
from snp.guards import (
    EMPTY,
    SPIKE,
    TABLE_LIMIT,
    Concat,
    Empty,
    Plus,
    Progression,
    Spike,
    Union,
    guard_contains,
    membership_table,
    normalize_guard,
    parse_guard,
    power,
    progressions_contain,
    render_guard,
    star,
)
from snp.models import UnaryGuard

LIMIT = 200


def _ends(node, starts, text):
    """End positions reachable by matching `node` from any of `starts` in `text`."""
    if isinstance(node, Empty):
        return set(starts)
    if isinstance(node, Spike):
        return {p + 1 for p in starts if p < len(text) and text[p] == "a"}
    if isinstance(node, Union):
        return _ends(node.left, starts, text) | _ends(node.right, starts, text)
    if isinstance(node, Concat):
        return _ends(node.right, _ends(node.left, starts, text), text)
    if isinstance(node, Plus):
        reached = set()
        frontier = _ends(node.child, starts, text)
        while frontier - reached:
            fresh = frontier - reached
            reached |= fresh
            frontier = _ends(node.child, fresh, text)
        return reached
    raise TypeError(node)


def brute_force_counts(node, limit=LIMIT):
    """{k <= limit : a^k matches node}, by matching against the string a^limit."""
    return _ends(node, {0}, "a" * limit)


def random_guard(rng: random.Random, depth: int):
    if depth == 0 or rng.random() < 0.2:
        return rng.choice([SPIKE, SPIKE, EMPTY, power(SPIKE, rng.randint(2, 5))])
    kind = rng.choice(["union", "concat", "plus", "power", "star"])
    if kind == "union":
        return Union(random_guard(rng, depth - 1), random_guard(rng, depth - 1))
    if kind == "concat":
        return Concat(random_guard(rng, depth - 1), random_guard(rng, depth - 1))
    if kind == "plus":
        return Plus(random_guard(rng, depth - 1))
    if kind == "star":
        return star(random_guard(rng, depth - 1))
    return power(random_guard(rng, depth - 1), rng.randint(2, 3))


RANDOM_GUARDS = [random_guard(random.Random(seed), 4) for seed in range(30)]


@pytest.mark.parametrize("text, k, expected", [
    ("a^+", 3, True),
    ("a^+", 0, False),
    ("a^2", 2, True),
    ("a^2", 3, False),
    ("a", 1, True),
    ("lambda", 0, True),
    ("λ", 1, False),
    ("(a^2)^+ ∪ a^3", 7, False),
    ("(a^2)^+ ∪ a^3", 8, True),
    ("(a^2)^+ | a^3", 3, True),
    ("a^*", 0, True),
    ("aa*", 0, False),
    ("a(aa)^+", 5, True),
    ("a(aa)^+", 4, False),
])
def test_guard_contains_examples(text, k, expected):
    node = parse_guard(text)
    assert guard_contains(node, k) is expected
    assert (k in brute_force_counts(node, 16)) is expected


def test_guard_contains_negative_count():
    assert not guard_contains(parse_guard("a^*"), -1)


@pytest.mark.parametrize("text, k, expected", [
    ("(a^2)^+", 10**12, True),
    ("(a^2)^+", 10**12 + 1, False),
    ("a^3(a^5)^*", 3 + 5 * 10**9, True),
    ("a^7", 10**9, False),
    ("a^+", TABLE_LIMIT + 1, True),
])
def test_guard_contains_huge_count(text, k, expected):
    assert guard_contains(parse_guard(text), k) is expected


def test_guard_contains_agrees_across_table_limit():
    node = parse_guard("(a^3)^+ ∪ a^2")
    for k in range(TABLE_LIMIT - 6, TABLE_LIMIT + 7):
        assert guard_contains(node, k) == (k % 3 == 0)


@pytest.mark.parametrize("text, expected", [
    ("a^5", {Progression(5, 0)}),
    ("a", {Progression(1, 0)}),
    ("lambda", {Progression(0, 0)}),
    ("a^+", {Progression(1, 1)}),
    ("a^*", {Progression(0, 1)}),
    ("(a^3)^+ ∪ a^2", {Progression(3, 3), Progression(2, 0)}),
    ("(a^2)^+", {Progression(2, 2)}),
    ("a^3(a^2)^*", {Progression(3, 2)}),
])
def test_normalize_guard_examples(text, expected):
    assert normalize_guard(parse_guard(text)) == expected


@pytest.mark.parametrize("index", range(len(RANDOM_GUARDS)))
def test_membership_agrees_with_brute_force(index):
    node = RANDOM_GUARDS[index]
    oracle = brute_force_counts(node)
    progressions = normalize_guard(node)
    for k in range(LIMIT + 1):
        assert guard_contains(node, k) == (k in oracle), (render_guard(node), k)
        assert progressions_contain(progressions, k) == (k in oracle), (render_guard(node), k)


@pytest.mark.parametrize("index", range(0, len(RANDOM_GUARDS), 3))
def test_rendered_guard_denotes_the_same_set(index):
    node = RANDOM_GUARDS[index]
    reparsed = parse_guard(render_guard(node))
    assert membership_table(reparsed, 60) == membership_table(node, 60)


def test_membership_table_prefix():
    table = membership_table(parse_guard("(a^3)^+"), 7)
    assert table == (False, False, False, True, False, False, True, False)


@pytest.mark.parametrize("text, position", [
    ("b", 0),
    ("a^", 2),
    ("(a", 2),
    ("a | ", 4),
    ("a)", 1),
])
def test_guard_syntax_errors_carry_position(text, position):
    with pytest.raises(GuardSyntaxError) as info:
        parse_guard(text)
    assert info.value.position == position


def test_power_of_zero_is_lambda():
    assert power(SPIKE, 0) == EMPTY
    with pytest.raises(ValueError):
        power(SPIKE, -1)


def test_unary_guard_keeps_text_and_both_membership_paths():
    guard = UnaryGuard.parse("  (a^2)^+ | a^3 ")
    assert str(guard) == "(a^2)^+ | a^3"
    for k in range(40):
        assert guard.contains(k) == guard.contains_by_expression(k)
    assert guard.singleton() is None
    assert UnaryGuard.parse("a^4").singleton() == 4
