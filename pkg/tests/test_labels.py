import itertools

from hypothesis import given
from hypothesis import strategies as st

from dlmcare.labels import DlmLabel, ItemKey, LabelledItem, Meta, flow_permitted, item_identity, may_read

UNIVERSE = ["a", "b", "c", "d"]
actors = st.sampled_from(UNIVERSE)
labels = st.builds(DlmLabel, actors, st.frozensets(actors))


def test_may_read_examples():
    label = DlmLabel.of("alice", ["hosp1"])
    assert may_read(label, "hosp1")
    assert may_read(label, "alice")
    assert not may_read(label, "bob")


def test_flow_permitted_examples():
    assert flow_permitted(LabelledItem(DlmLabel.of("alice", ["hosp1"]), Meta("m", 1), "d"), "hosp1")
    assert not flow_permitted(LabelledItem(DlmLabel.of("alice", []), Meta("m", 1), "d"), "hosp1")


def test_flow_permitted_matches_membership_enumeration():
    # every label and destination over a four-actor universe
    checked = 0
    for owner in UNIVERSE:
        for n in range(len(UNIVERSE) + 1):
            for readers in itertools.combinations(UNIVERSE, n):
                item = LabelledItem(DlmLabel(owner, frozenset(readers)), Meta("p", 0), "x")
                for dest in UNIVERSE:
                    allowed = dest == owner or any(r == dest for r in readers)
                    assert flow_permitted(item, dest) is allowed
                    checked += 1
    assert checked == 4 * 16 * 4


@given(labels)
def test_owner_always_reads(label):
    assert may_read(label, label.owner)


@given(labels, actors, actors)
def test_adding_a_reader_never_revokes(label, extra, dest):
    wider = DlmLabel(label.owner, label.readers | {extra})
    if may_read(label, dest):
        assert may_read(wider, dest)


def test_identity_ignores_meta():
    lab = DlmLabel.of("alice", ["hosp1"])
    a = LabelledItem(lab, Meta("monitoring", 5), "hr=72")
    b = LabelledItem(lab, Meta("research", 9, True), "hr=72")
    assert item_identity(a) == item_identity(b)


def test_identity_distinguishes_payload_and_readers():
    lab = DlmLabel.of("alice", ["hosp1"])
    assert item_identity(LabelledItem(lab, Meta("m", 1), "x")) != item_identity(LabelledItem(lab, Meta("m", 1), "y"))
    other = DlmLabel.of("alice", ["hosp1", "hosp2"])
    k1 = item_identity(LabelledItem(lab, Meta("m", 1), "x"))
    k2 = item_identity(LabelledItem(other, Meta("m", 1), "x"))
    # plain tuple comparison as the oracle
    assert (k1.label.owner, k1.label.readers, k1.payload) != (k2.label.owner, k2.label.readers, k2.payload)
    assert k1 != k2


def test_identity_is_the_label_payload_pair():
    lab = DlmLabel.of("alice", ["hosp1"])
    assert item_identity(LabelledItem(lab, Meta("m", 1), "x")) == (lab, "x")
    assert isinstance(item_identity(LabelledItem(lab, Meta("m", 1), "x")), ItemKey)


def test_labels_are_immutable():
    lab = DlmLabel.of("alice", ["hosp1"])
    try:
        lab.owner = "bob"
    except AttributeError:
        pass
    else:
        raise AssertionError("label mutated")


def test_meta_validation():
    import pytest

    with pytest.raises(ValueError):
        Meta("", 1)
    with pytest.raises(ValueError):
        Meta("p", -1)
    assert Meta("p", 0).restricted is False
    with pytest.raises(ValueError):
        DlmLabel("", frozenset())
