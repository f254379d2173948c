import pytest

from dlmcare import operations as ops
from dlmcare import state as st
from dlmcare.labels import DlmLabel, Meta

ACCEPTANCE_LINES = []


@pytest.fixture
def world():
    """alice (phone + home hub), bob (phone), hosp1 with drbob, hosp2 with drdan."""
    s = st.SystemState()
    st.register_patient(s, "alice")
    st.register_patient(s, "bob")
    for u in ("hosp1", "hosp2"):
        st.register_user(s, u)
    st.add_hospital(s, "hosp1", ["drbob"])
    st.add_hospital(s, "hosp2", ["drdan"])
    st.bind_device(s, "phone1", "sphone", "alice", "1234")
    st.bind_device(s, "hub1", "home", "alice", "h1")
    st.bind_device(s, "phone2", "sphone", "bob", "4321")
    return s


@pytest.fixture
def uploaded(world):
    label = DlmLabel.of("alice", ["hosp1"])
    ops.upload(world, "phone1", "hr=72", label, Meta("monitoring", 10), "alice")
    return world, label


def pytest_runtest_logreport(report):
    if report.when == "call" and "acceptance" in report.keywords:
        name = report.nodeid.split("::")[-1]
        ACCEPTANCE_LINES.append(f"{name}: {'PASS' if report.passed else 'FAIL'}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
