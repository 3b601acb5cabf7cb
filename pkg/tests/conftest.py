import pytest

from scentree import GenSpec, Grid, ScenarioSet, generate, linear_plant

ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    line = f"criterion {number} [{'PASS' if passed else 'FAIL'}] {title}"
    if detail:
        line += f": {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def plant():
    return linear_plant()


@pytest.fixture(scope="session")
def grid(plant):
    return Grid.for_model(plant)


@pytest.fixture(scope="session")
def three_seq():
    """s1=[0,0], s2=[0,1], s3=[1,1], equally likely."""
    return ScenarioSet.uniform([[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


@pytest.fixture(scope="session")
def simple_set():
    return generate(GenSpec(family="simple_converging", count=4, seed=0))


@pytest.fixture(scope="session")
def walk_200():
    return generate(GenSpec(family="branching_walk", count=200, seed=3))


@pytest.fixture(scope="session")
def walk_50():
    return generate(GenSpec(family="branching_walk", count=50, seed=5))


@pytest.fixture(scope="session")
def walk_600():
    return generate(GenSpec(family="branching_walk", count=600, seed=0))
