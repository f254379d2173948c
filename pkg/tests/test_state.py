import pytest

from dlmcare import state as st
from dlmcare.errors import AuthMismatch, DuplicateRegistration, UnknownDevice
from dlmcare.harness import snapshot


def test_register_patient_builds_singleton():
    s = st.register_patient(st.SystemState(), "alice")
    assert s.auth.patients == {"alice"}
    assert [r.effect for r in s.audit] == ["registered"]


@pytest.mark.parametrize(
    "call",
    [
        lambda s: st.register_patient(s, "alice"),
        lambda s: st.register_user(s, "hosp1"),
        lambda s: st.add_hospital(s, "hosp1", ["drbob"]),
        lambda s: st.bind_device(s, "phone1", "sphone", "alice", "0000"),
    ],
)
def test_duplicates_rejected_without_change(world, call):
    before = snapshot.dumps(world)
    with pytest.raises(DuplicateRegistration):
        call(world)
    assert snapshot.dumps(world) == before


def test_add_hospital_twice():
    s = st.add_hospital(st.SystemState(), "h", ["d"])
    with pytest.raises(DuplicateRegistration):
        st.add_hospital(s, "h", [])
    assert s.hospitals["h"].hospital_id == "h"


def test_bad_device_kind():
    with pytest.raises(ValueError):
        st.bind_device(st.SystemState(), "x", "laptop", "alice", "1")


def test_authenticate(world):
    assert st.authenticate(world, "phone1", "alice").bound_actor == "alice"
    with pytest.raises(AuthMismatch):
        st.authenticate(world, "phone1", "bob")
    with pytest.raises(UnknownDevice):
        st.authenticate(world, "nope", "alice")


def test_setup_round_trips_through_snapshot():
    s = st.SystemState()
    for p in ("alice", "bob"):
        st.register_patient(s, p)
    for h, staff in (("hosp1", ["drbob", "drcarol"]), ("hosp2", [])):
        st.register_user(s, h)
        st.add_hospital(s, h, staff)
    st.bind_device(s, "phone1", "sphone", "alice", "1234")
    st.bind_device(s, "phone2", "sphone", "bob", "9 9")
    st.bind_device(s, "hub", "home", "alice", "-")
    text = snapshot.dumps(s)
    loaded = snapshot.loads(text)
    assert loaded == s
    assert snapshot.dumps(loaded) == text


def test_state_equality_ignores_insertion_order():
    a, b = st.SystemState(), st.SystemState()
    a.auth.patients.update(["x", "y"])
    b.auth.patients.update(["y", "x"])
    assert a == b


def test_sessions_hold_no_data(uploaded):
    s, _ = uploaded
    for session in s.devices.values():
        assert set(vars(session)) == {"device_id", "kind", "bound_actor", "credential"}
