import pytest

from sml.groups import GroupPresentationModel


@pytest.fixture
def free2():
    return GroupPresentationModel.from_json({"kind": "free", "rank": 2, "marked": ["a"]})


@pytest.fixture
def z2():
    return GroupPresentationModel.from_json({"kind": "abelian", "invariants": [0, 0], "marked": ["(1,0)"]})


@pytest.fixture
def hyperbolic():
    return GroupPresentationModel.from_json({"kind": "semidirect", "matrix": [[2, 1], [1, 1]], "marked": "acting_Z"})


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
