import pytest

from snp import eliminator
from snp.constructs import Sequential, Split, classify_constructs
from snp.eliminator import (
    Fragment,
    apply_fragment,
    compose_offsets,
    eliminate_iteration,
    eliminate_sequential,
    eliminate_split,
    insert_normalizer,
    make_normalizer,
    transform,
)
from snp.equivalence import compare, sink_schedule
from snp.errors import OutOfScopeError, RestrictionError, RewriteVerificationError
from snp.fixtures import CONSTRUCT_FIXTURES
from snp.models import relay

CONSTRUCTIONS = {"identity", "sequential-reservoir", "iteration-clock", "split-parent", "split-child",
                 "join-parent", "join-junction"}


JOIN_THEN_DELAYED_RELAY = """
system join_then_relay
neuron s11 spikes=1
  rule "a -> a"
neuron s12
  rule "a -> a"
neuron s13
  rule "a -> a"
neuron s14
  rule "a^2 -> a; 3"
neuron s15
  rule "a -> a; 1"
neuron s16
synapse s11 -> s12
synapse s11 -> s13
synapse s12 -> s14
synapse s13 -> s14
synapse s14 -> s15
synapse s15 -> s16
source s11
sink s16
"""


def arrivals(system, sink, horizon=None):
    return [t for t, count in sink_schedule(system, horizon)[sink] for _ in range(count)]


# the delayed relay s1 feeds a split whose child s3 is delayed as well
SEQUENTIAL_INTO_SPLIT = """
system sequential_into_split
neuron s1 spikes=1
  rule "a -> a; 2"
neuron s2
  rule "a -> a"
neuron s3
  rule "a -> a; 1"
neuron s4
neuron s5
synapse s1 -> s2
synapse s2 -> s3
synapse s2 -> s4
synapse s3 -> s5
source s1
sink s4
sink s5
"""


def relay_before(system, sink, relay_id):
    (feeder,) = system.predecessors(sink)
    return apply_fragment(system, Fragment(neurons=(relay(relay_id),),
                                           removed_synapses=((feeder, sink),),
                                           added_synapses=((feeder, relay_id), (relay_id, sink)),
                                           placement={relay_id: sink}))


@pytest.mark.parametrize("d", range(1, 6))
def test_sequential_single_shifts_by_one(load, d):
    original = load("sequential_single", d=d)
    result = transform(original)
    assert result.offsets == {"s12": 1}
    assert result.factors == {"s12": 1}
    assert arrivals(original, "s12") == [1 + d]
    assert arrivals(result.system, "s12") == [2 + d]
    assert result.system.source == "s11_res"
    assert result.system.neuron("s11_res").initial_spikes == 1 + d


@pytest.mark.parametrize("d1, d2", [(d1, d2) for d1 in range(1, 5) for d2 in range(0, d1 + 1)])
def test_sequential_double_uses_the_product_of_widths(load, d1, d2):
    original = load("sequential_double", d1=d1, d2=d2)
    result = transform(original)
    total = (1 + d1) * (1 + d2)
    assert arrivals(original, "s33") == [2 + d1 + d2]
    assert arrivals(result.system, "s33") == [total + 2]
    assert result.offsets == {"s33": 1 + d1 * d2}
def test_eliminate_sequential_rewrite(load):
    system = load("sequential_double", d1=2, d2=1)
    rewrite = eliminate_sequential(system, Sequential(path=("s31", "s32", "s33")))
    assert rewrite.construction == "sequential-reservoir"
    assert rewrite.expected_offset == 3
    assert rewrite.boundary_map == {"s31": ("s31_res", "s31")}
    rewritten = rewrite.apply(system)
    assert rewritten.neuron("s31_res").initial_spikes == 6
    assert rewritten.neuron("s31").rule.text == "a^6 -> a"
    assert rewritten.neuron("s32").rule.text == "a -> a"
    assert not rewritten.has_delays


def test_growing_delays_on_a_chain_are_out_of_scope(load):
    with pytest.raises(OutOfScopeError, match="open problem"):
        transform(load("sequential_double", d1=1, d2=3))


@pytest.mark.parametrize("d", range(1, 6))
def test_iteration_single_shifts_by_one(load, d):
    original = load("iteration_single", d=d)
    result = transform(original)
    assert result.offsets == {"s13": 1}
    period = 2 + d
    assert arrivals(original, "s13", 40)[:4] == [2 + d + n * period for n in range(4)]
    assert arrivals(result.system, "s13", 40)[:4] == [3 + d + n * period for n in range(4)]
    gate = result.system.neuron("s12_gate")
    assert gate.rule.text == f"a^{period} -> a"
    assert gate.initial_spikes == 0
    assert compare(original, result.system, horizon=4 * (1 + d) + 10).accepted

def test_delay_position_in_the_loop_does_not_change_the_rewrite(load):
    first = transform(load("iteration_single", d=2)).system
    second = transform(load("iteration_single_other", d=2)).system
    assert first.neurons == second.neurons
    assert first.synapses == second.synapses


@pytest.mark.parametrize("d1, d2", [(1, 1), (2, 1), (1, 2)])
def test_iteration_with_two_delays(load, d1, d2):
    result = transform(load("iteration_double", d1=d1, d2=d2))
    assert result.offsets == {"s13": 1}
    assert not result.system.has_delays


def test_eliminate_iteration_gate_preload(load):
    system = load("iteration_single", d=2)
    (iteration,) = classify_constructs(system).of_kind("iteration")
    rewrite = eliminate_iteration(system, iteration)
    assert rewrite.construction == "iteration-clock"
    assert rewrite.boundary_map == {"s12": ("s12_gate",)}
    assert ("s12", "s13") in rewrite.fragment.removed_synapses
    assert set(rewrite.fragment.added_synapses) == {("s11", "s12_gate"), ("s12_gate", "s13")}


def test_iteration_entered_from_outside(parse):
    system = parse("""
    neuron s0 spikes=1
      rule "a -> a"
    neuron s1
      rule "a -> a"
    neuron s2
      rule "a -> a; 2"
    neuron s3
    synapse s0 -> s1
    synapse s1 -> s2
    synapse s2 -> s1
    synapse s2 -> s3
    source s0
    sink s3
    """)
    result = transform(system)
    assert result.offsets == {"s3": 1}
    assert arrivals(system, "s3", 20)[:3] == [5, 9, 13]
    assert arrivals(result.system, "s3", 20)[:3] == [6, 10, 14]


def test_three_delays_on_a_loop_are_out_of_scope(parse):
    system = parse("""
    neuron s1 spikes=1
      rule "a -> a; 1"
    neuron s2
      rule "a -> a; 1"
    neuron s3
      rule "a -> a; 1"
    neuron s4
    synapse s1 -> s2
    synapse s2 -> s3
    synapse s3 -> s1
    synapse s3 -> s4
    source s1
    sink s4
    """)
    with pytest.raises(OutOfScopeError, match="more than two"):
        transform(system)


@pytest.mark.parametrize("d", range(1, 6))
def test_split_parent_keeps_timing(load, d):
    original = load("split_parent", d=d)
    result = transform(original)
    assert result.offsets == {"s13": 0, "s14": 0}
    assert result.factors == {"s13": 1, "s14": 1}
    for sink in ("s13", "s14"):
        assert arrivals(result.system, sink) == arrivals(original, sink) == [2 + d]


def test_delayed_source_parent_gets_a_reservoir(parse):
    system = parse("""
    neuron s11 spikes=1
      rule "a -> a; 2"
    neuron s12
    neuron s13
    synapse s11 -> s12
    synapse s11 -> s13
    source s11
    sink s12
    sink s13
    """)
    result = transform(system)
    assert result.offsets == {"s12": 1, "s13": 1}
    assert result.system.source == "s11_res"


@pytest.mark.parametrize("d", range(1, 6))
def test_split_child_sends_a_train_to_the_undelayed_branch(load, d):
    original = load("split_child", d=d)
    result = transform(original)
    assert result.offsets == {"s14": 0, "s15": 0}
    assert result.factors == {"s14": 1 + d, "s15": 1}
    assert arrivals(original, "s14") == [2]
    assert arrivals(result.system, "s14") == list(range(2, 3 + d))
    assert arrivals(result.system, "s15") == arrivals(original, "s15") == [2 + d]


def test_eliminate_split_child_reports_the_train(load):
    system = load("split_child", d=2)
    rewrite = eliminate_split(system, Split(parent="s11", children=("s12", "s13")))
    assert rewrite.construction == "split-child"
    assert rewrite.target == Split(parent="s11", children=("s12", "s13"))
    assert rewrite.train_edges == (("s11", "s12", 3),)
    assert rewrite.needs_normalizer
    assert rewrite.expected_count_factor == 3


@pytest.mark.parametrize("d", [1, 2, 3])
def test_normalizer_collapses_the_train(load, d):
    original = load("split_child", d=d)
    rewritten = transform(original).system
    normalized, norm = insert_normalizer(rewritten, ("s12", "s14"), 1 + d)
    assert norm == "s12_s14_norm"
    assert normalized.neuron(norm).rule.text == f"a^{1 + d} -> a"
    assert arrivals(normalized, "s14") == [3 + d]
    verdict = compare(original, normalized, branch_offsets=True)
    assert verdict.accepted
    assert verdict.offsets == {"s14": 1 + d, "s15": 0}
    assert verdict.count_factors == {"s14": 1, "s15": 1}


def test_make_normalizer():
    assert make_normalizer(2).rule.text == "a^3 -> a"
    assert make_normalizer(1, "n").id == "n"
    with pytest.raises(ValueError):
        make_normalizer(0)


def test_unequal_child_delays_are_out_of_scope(parse):
    system = parse("""
    neuron s11 spikes=1
      rule "a -> a"
    neuron s12
      rule "a -> a; 1"
    neuron s13
      rule "a -> a; 2"
    neuron s14
    neuron s15
    synapse s11 -> s12
    synapse s11 -> s13
    synapse s12 -> s14
    synapse s13 -> s15
    source s11
    sink s14
    sink s15
    """)
    with pytest.raises(OutOfScopeError, match="unequal"):
        transform(system)


@pytest.mark.parametrize("d", range(1, 6))
def test_join_parent_shifts_by_one(load, d):
    original = load("join_parent", d=d)
    result = transform(original)
    assert result.offsets == {"s15": 1}
    assert arrivals(original, "s15") == [3 + d]
    assert arrivals(result.system, "s15") == [4 + d]
    assert result.system.neuron("s14").rule.text == "a^2 -> a"


@pytest.mark.parametrize("d", range(1, 6))
def test_join_junction_keeps_timing(load, d):
    original = load("join_junction", d=d)
    result = transform(original)
    assert result.offsets == {"s15": 0}
    assert arrivals(result.system, "s15") == arrivals(original, "s15") == [3 + d]


@pytest.mark.parametrize("d", range(1, 6))
def test_branching_with_a_delayed_junction(load, d):
    original = load("branching", dc=0, dj=d)
    result = transform(original, horizon=30)
    assert [r.construction for r in result.rewrites] == ["join-junction"]
    assert result.offsets == {"s5": 0}
    assert result.verdict.compared_horizon == 30
    assert arrivals(result.system, "s5", 30) == arrivals(original, "s5", 30) == [3 + d]
    assert compare(original, result.system, horizon=30).accepted


@pytest.mark.parametrize("d", range(1, 6))
def test_branching_with_a_delayed_child_is_a_join_parent(load, d):
    original = load("branching", dc=d, dj=0)
    result = transform(original, horizon=30)
    assert [r.construction for r in result.rewrites] == ["join-parent"]
    assert result.offsets == {"s5": 1}
    assert arrivals(original, "s5", 30) == [3 + d]
    assert arrivals(result.system, "s5", 30) == [4 + d]
    assert compare(original, result.system, horizon=30).accepted


def test_delay_after_a_join_gets_its_own_reservoir(parse):
    system = parse(JOIN_THEN_DELAYED_RELAY)
    result = transform(system)
    assert [r.construction for r in result.rewrites] == ["join-junction", "sequential-reservoir"]
    assert result.offsets == {"s16": 1}
    assert arrivals(system, "s16") == [8]
    assert arrivals(result.system, "s16") == [9]
    pool = result.system.neuron("s15_res")
    assert pool.initial_spikes == 3
    assert pool.rule.text == "(a^2)^+/a^2 -> a"
    assert result.system.predecessors("s15_res") == ["s14"]
    assert result.system.neuron("s15").rule.text == "a^2 -> a"
    assert not result.system.has_delays


def test_split_below_a_delayed_chain_gets_its_own_anchor(parse):
    system = parse(SEQUENTIAL_INTO_SPLIT)
    result = transform(system)
    assert [r.construction for r in result.rewrites] == ["split-child", "sequential-reservoir"]
    assert result.offsets == {"s4": 1, "s5": 1}
    assert result.factors == {"s4": 2, "s5": 1}
    parent = result.system.neuron("s2")
    assert parent.rule.text == "(a^2)^+/a^2 -> a"
    assert parent.initial_spikes == 3
    assert result.system.neuron("s1_res").initial_spikes == 3
    assert arrivals(system, "s4") == [4]
    assert arrivals(system, "s5") == [6]
    assert arrivals(result.system, "s4") == [5, 6]
    assert arrivals(result.system, "s5") == [7]


def test_relay_before_the_sink_keeps_the_offset(parse):
    system = parse("""
    neuron s11 spikes=1
      rule "a -> a; 2"
    neuron s12
      rule "a -> a"
    neuron s13
    synapse s11 -> s12
    synapse s12 -> s13
    source s11
    sink s13
    """)
    result = transform(system)
    assert result.offsets == {"s13": 1}
    assert arrivals(system, "s13") == [4]
    assert arrivals(result.system, "s13") == [5]


@pytest.mark.parametrize("name", sorted(CONSTRUCT_FIXTURES))
def test_relay_in_front_of_every_sink_shifts_both_runs_alike(load, name):
    horizon = 60
    original = load(name)
    candidate = transform(original).system
    before = compare(original, candidate, horizon=horizon, branch_offsets=True)
    shifted_original, shifted_candidate = original, candidate
    for n, sink in enumerate(original.sinks):
        shifted_original = relay_before(shifted_original, sink, f"extra{n}")
        shifted_candidate = relay_before(shifted_candidate, sink, f"extra{n}")
    for plain, shifted in ((original, shifted_original), (candidate, shifted_candidate)):
        unshifted, moved = sink_schedule(plain, horizon), sink_schedule(shifted, horizon)
        for sink in original.sinks:
            assert moved[sink] == [(t + 1, count) for t, count in unshifted[sink] if t + 1 <= horizon]
    after = compare(shifted_original, shifted_candidate, horizon=horizon, branch_offsets=True)
    assert before.accepted and after.accepted
    assert after.offsets == before.offsets
    assert after.count_factors == before.count_factors


@pytest.mark.parametrize("name", sorted(CONSTRUCT_FIXTURES))
def test_rewritten_fixtures_are_delay_free_and_accounted_for(load, name):
    result = transform(load(name))
    assert not result.system.has_delays
    assert result.verdict is not None and result.verdict.accepted
    assert result.verdict.offsets == result.offsets
    assert result.verdict.count_factors == result.factors
    for rewrite in result.rewrites:
        assert rewrite.construction in CONSTRUCTIONS
        assert rewrite.expected_offset >= 0
        assert rewrite.expected_count_factor >= 1
    assert all(factor >= 1 for factor in result.factors.values())


def test_composed_offset_of_a_chain_adds_up(parse):
    system = parse(JOIN_THEN_DELAYED_RELAY)
    candidate = transform(system).system
    assert compose_offsets(system, candidate, {"s15_res": 1}) == {"s16": 1}
    assert compose_offsets(system, candidate, {"s11": 2, "s15_res": 1}) == {"s16": 3}


@pytest.mark.parametrize("contributions, expected", [
    ({}, 0),
    ({"s3": 1}, 0),
    ({"s3": 2}, 0),
    ({"s3": 3}, 1),
    ({"s2": 1}, 1),
    ({"s1": 2}, 2),
])
def test_composed_offset_at_a_junction_follows_the_latest_branch(load, contributions, expected):
    # s2 reaches s4 at step 4 and s3 at step 2: s3 has two steps of slack
    original = load("branching", dc=2, dj=0)
    candidate = load("branching", dc=0, dj=0)
    assert compose_offsets(original, candidate, contributions) == {"s5": expected}


def test_offsets_the_rewritten_system_does_not_reproduce_are_refused(load, monkeypatch, caplog):
    monkeypatch.setattr(eliminator, "compose_offsets", lambda *args, **kwargs: {"s12": 0})
    with caplog.at_level("WARNING", logger="snp.eliminator"):
        with pytest.raises(RewriteVerificationError) as info:
            transform(load("sequential_single", d=2))
    assert info.value.verdict is not None
    assert not info.value.verdict.accepted
    assert "s12" in str(info.value)
    assert any("not reproduced" in record.getMessage() for record in caplog.records)
def test_delay_free_system_is_returned_unchanged(load):
    system = load("split_child", d=0)
    result = transform(system)
    assert result.system == system
    assert result.offsets == {"s14": 0, "s15": 0}
    assert "no rewrites" in result.report()


def test_unrestricted_system_is_refused(load):
    with pytest.raises(RestrictionError):
        transform(load("walkthrough", x=5))


def test_lost_spike_risk_is_out_of_scope(load):
    with pytest.raises(OutOfScopeError, match="open problem"):
        transform(load("lost_spike"))

def test_report_and_serialization(load):
    result = transform(load("split_child", d=2))
    report = result.report()
    assert report.startswith("transform split_child -> split_child_nodelay\n")
    assert "rewrite: split-child on Split(s11; s12, s13): offset 0, factor 3" in report
    assert "sink s14: offset 0 factor 3\n" in report
    assert f"checked over {result.verdict.compared_horizon} steps: ACCEPT" in report
    data = result.to_dict()
    assert data["factors"] == {"s14": 3, "s15": 1}
    assert data["system"]["name"] == "split_child_nodelay"
    assert data["checked_horizon"] == result.verdict.compared_horizon
