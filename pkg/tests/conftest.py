import pytest

from kirchhoff_nehari.discretize import make_mesh

_CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record a one-line pass/fail verdict that is echoed in the terminal summary."""

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"[{'PASS' if passed else 'FAIL'}] {label}: {detail}"
        _CRITERIA.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def mesh256():
    return make_mesh(5, 256, "uniform")


@pytest.fixture(scope="session")
def mesh128():
    return make_mesh(5, 128, "uniform")
