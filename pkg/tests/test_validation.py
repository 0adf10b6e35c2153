import pytest

from snp.validation import ViolationKind, repeated_spikers, validate_restricted


def kinds(report):
    return {violation.kind for violation in report.violations}


def test_walkthrough_with_one_spike_is_restricted(load):
    report = validate_restricted(load("walkthrough", x=1))
    assert report.ok
    assert report.lines() == ["restricted class: ok"]


def test_walkthrough_with_several_spikes_breaks_initial_placement(load):
    report = validate_restricted(load("walkthrough", x=5))
    assert kinds(report) == {ViolationKind.INITIAL_SPIKES}
    assert report.blocking


@pytest.mark.parametrize("name", ["sequential_single", "sequential_double", "iteration_single",
                                  "iteration_double", "split_parent", "split_child", "join_parent",
                                  "join_junction", "branching"])
def test_construct_fixtures_are_restricted(load, name):
    assert validate_restricted(load(name)).ok


def test_lost_spike_risk_is_flagged_on_the_synapse(load):
    report = validate_restricted(load("lost_spike"))
    (risk,) = report.of_kind(ViolationKind.LOST_SPIKE_RISK)
    assert risk.synapse == ("s1", "s2")
    assert risk.blocking
    assert "s1" in repeated_spikers(load("lost_spike"))


def test_delayed_neuron_feeding_a_slower_one_is_flagged(load):
    report = validate_restricted(load("sequential_double", d1=1, d2=3))
    (risk,) = report.of_kind(ViolationKind.LOST_SPIKE_RISK)
    assert risk.synapse == ("s31", "s32")
    assert risk.blocking
    assert "s31" not in repeated_spikers(load("sequential_double", d1=1, d2=3))


@pytest.mark.parametrize("d1, d2", [(2, 1), (3, 3), (0, 2)])
def test_chains_without_a_faster_delayed_feeder_are_not_flagged(load, d1, d2):
    report = validate_restricted(load("sequential_double", d1=d1, d2=d2))
    assert not report.of_kind(ViolationKind.LOST_SPIKE_RISK)


def test_undelayed_single_feeder_of_a_delayed_junction_is_exempt(load):
    report = validate_restricted(load("join_junction", d=3))
    assert not report.of_kind(ViolationKind.LOST_SPIKE_RISK)


def test_multi_rule_neuron(parse):
    report = validate_restricted(parse("""
    neuron s1 spikes=1
      rule "a -> a"
      rule "a^2 -> a"
    neuron s2
    synapse s1 -> s2
    """))
    assert kinds(report) == {ViolationKind.MULTI_RULE}
    assert report.of_kind(ViolationKind.MULTI_RULE)[0].neurons == ("s1",)


def test_delayed_forgetting(parse):
    report = validate_restricted(parse("""
    neuron s1 spikes=1
      rule "a -> a"
    neuron s2
      rule "a -> lambda; 2"
    neuron s3
    synapse s1 -> s2
    synapse s2 -> s3
    sink s3
    """))
    assert kinds(report) == {ViolationKind.DELAYED_FORGETTING}


def test_non_blocking_topology_warnings(parse):
    report = validate_restricted(parse("""
    neuron s1 spikes=1
      rule "a -> a"
    neuron s2
      rule "a -> a"
    neuron s3
    neuron s4
    synapse s1 -> s2
    synapse s2 -> s3
    synapse s2 -> s4
    source s1
    sink s2
    """))
    assert kinds(report) == {ViolationKind.SINK_OUTGOING, ViolationKind.NO_RULE_NON_SINK}
    assert not report.blocking
    assert all(line.startswith("warning: ") for line in report.lines())


def test_source_with_incoming_synapse(parse):
    report = validate_restricted(parse("""
    neuron s0
      rule "a -> a"
    neuron s1 spikes=1
      rule "a -> a"
    neuron s2
    synapse s0 -> s1
    synapse s1 -> s2
    source s1
    sink s2
    """))
    assert ViolationKind.SOURCE_INCOMING in kinds(report)


def test_report_serializes(load):
    data = validate_restricted(load("lost_spike")).to_dict()
    assert data["ok"] is False
    assert {v["kind"] for v in data["violations"]} == {"initial-spikes", "lost-spike-risk"}
    risk = next(v for v in data["violations"] if v["kind"] == "lost-spike-risk")
    assert risk["synapse"] == ["s1", "s2"]
    assert risk["blocking"] is True
