import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst

from dlmcare import operations as ops
from dlmcare import retention
from dlmcare import state as st
from dlmcare.labels import DlmLabel, ItemKey, Meta


def test_tick_advances_clock():
    s = retention.tick(st.SystemState(), 5)
    assert s.clock == 5
    assert s.audit[-1].effect == "ticked"


def test_tick_rejects_non_positive():
    with pytest.raises(ValueError):
        retention.tick(st.SystemState(), 0)


@given(hst.integers(1, 50), hst.integers(1, 50))
def test_two_ticks_equal_their_sum(a, b):
    s1 = retention.tick(retention.tick(st.SystemState(), a), b)
    s2 = retention.tick(st.SystemState(), a + b)
    assert s1.clock == s2.clock == a + b


@given(hst.lists(hst.integers(1, 9), max_size=30))
def test_clock_never_decreases(steps):
    s = st.SystemState()
    seen = [s.clock]
    for n in steps:
        retention.tick(s, n)
        seen.append(s.clock)
    assert seen == sorted(seen)


def test_expired_item_erased_everywhere(uploaded):
    s, label = uploaded
    ops.upload(s, "phone1", "short", label, Meta("m", 5), "alice")
    ops.download(s, "hosp1", "drbob", "alice")
    retention.tick(s, 6)
    erased = retention.sweep(s)
    key = ItemKey(label, "short")
    assert erased == {key}
    assert not s.locations_of(key)
    # expiry 10 >= 6 survives
    assert s.locations_of(ItemKey(label, "hr=72")) == {"db", "hosp1"}


def test_expiry_boundary_survives(uploaded):
    s, label = uploaded
    retention.tick(s, 10)
    assert retention.sweep(s) == set()
    retention.tick(s, 1)
    assert retention.sweep(s) == {ItemKey(label, "hr=72")}


def test_empty_sweep_only_touches_audit(uploaded):
    s, _ = uploaded
    tables = {loc: dict(t) for loc, t in s.tables()}
    n = len(s.audit)
    assert retention.sweep(s) == set()
    assert {loc: dict(t) for loc, t in s.tables()} == tables
    assert len(s.audit) == n + 1


def _populated(expiries, ticks, download_mask):
    s = st.SystemState()
    st.register_patient(s, "p")
    st.register_user(s, "h")
    st.add_hospital(s, "h", ["d"])
    st.bind_device(s, "ph", "sphone", "p", "0")
    lab = DlmLabel.of("p", ["h"])
    for i, e in enumerate(expiries):
        ops.upload(s, "ph", f"v{i}", lab, Meta("m", e), "p")
        if download_mask[i % len(download_mask)]:
            ops.download(s, "h", "d", "p")
    if ticks:
        retention.tick(s, ticks)
    return s


@settings(max_examples=60, deadline=None)
@given(hst.lists(hst.integers(0, 20), min_size=1, max_size=8), hst.integers(0, 25),
       hst.lists(hst.booleans(), min_size=1, max_size=4))
def test_sweep_matches_filter_oracle(expiries, ticks, mask):
    s = _populated(expiries, ticks, mask)
    # brute-force filter over the union of all tables
    survivors = {
        loc: {k for k, it in table.items() if it.meta.expiry >= s.clock} for loc, table in s.tables()
    }
    doomed = {k for _, table in s.tables() for k, it in table.items() if it.meta.expiry < s.clock}
    assert retention.sweep(s) == doomed
    assert {loc: set(t) for loc, t in s.tables()} == survivors
    assert all(it.meta.expiry >= s.clock for _, t in s.tables() for it in t.values())
    after_first = {loc: dict(t) for loc, t in s.tables()}
    assert retention.sweep(s) == set()
    assert {loc: dict(t) for loc, t in s.tables()} == after_first
