import numpy as np
import pytest

from setse.graph import PreparedGraph

# Four-node star through B and its known equilibrium elevations (4 d.p.).
EXAMPLE_EDGES = [(0, 1), (1, 2), (1, 3)]
EXAMPLE_FORCES = [1.0, 0.0, -0.5, -0.5]
EXAMPLE_ELEVATION = np.array([0.1450, 0.0185, -0.0818, -0.0818])


@pytest.fixture
def example_graph():
    return PreparedGraph.from_edges(["A", "B", "C", "D"], EXAMPLE_EDGES, EXAMPLE_FORCES, k=1000.0, d=1.0)


@pytest.fixture
def two_node_graph():
    return PreparedGraph.from_edges(["A", "B"], [(0, 1)], [1.0, -1.0], k=1000.0, d=1.0)


# Acceptance lines, printed once at the end of the run whatever the capture mode.
ACCEPTANCE_LINES: list[str] = []


def report(criterion: int, name: str, passed: bool, detail: str) -> None:
    line = f"criterion {criterion:>2} {'PASS' if passed else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
