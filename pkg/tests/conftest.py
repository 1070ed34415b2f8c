import pytest

from bnetlab.lattice import LatticeConfig, field_from_spec


@pytest.fixture
def census_field():
    """7 x 7 fixture: a meeting at (-1, 1), a branch at (0, 2), a right arrow at (2, 4)."""
    cfg = LatticeConfig(0.0, -3, 3, 0, 6)
    return field_from_spec(cfg, {0: {-2: "R", 0: "L"}, 2: {0: "B"}, 4: {2: "R"}})


@pytest.fixture
def four_slice_field():
    """Window x in [-3, 3], t in [0, 3], Both at (0, 0), left arrows elsewhere."""
    return field_from_spec(LatticeConfig(0.0, -3, 3, 0, 3), {0: {0: "B"}})


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import VERDICTS

    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)
