import numpy as np
import pytest

from g2c.graph import DependencyGraph

ACCEPTANCE_LINES = []


def random_graph(rng, n, labels):
    """Random single-headed tree: a random permutation, each node attaches to an earlier one."""
    order = rng.permutation(n)
    heads = [-1] * n
    for k in range(1, n):
        heads[order[k]] = int(order[rng.integers(0, k)])
    return DependencyGraph.from_heads(heads, [labels[rng.integers(len(labels))] for _ in range(n)])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid or report.when != "call":
        return
    props = dict(report.user_properties)
    criterion = props.get("criterion", report.nodeid.split("::")[-1])
    detail = props.get("detail", "")
    status = "PASS" if report.passed else "FAIL"
    ACCEPTANCE_LINES.append(f"[{status}] {criterion}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
