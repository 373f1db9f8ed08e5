from pathlib import Path

import pytest

from typegnn.evaluation.synthetic import SyntheticSpec, generate_project
from typegnn.frontend import load_project, lower_to_ir, parse_project
from typegnn.graph import build_graph

FIXTURES = Path(__file__).parent / "fixtures"
NETWORK = FIXTURES / "network"

SMALL_SPEC = SyntheticSpec(classes_per_project=(2, 3), fields_per_class=(1, 3), methods_per_class=(1, 2),
                           functions_per_project=(1, 2), statements_per_body=(1, 3))


def small_project(seed: int, spec: SyntheticSpec = SMALL_SPEC):
    return generate_project(spec, seed, f"p{seed}")


@pytest.fixture(scope="session")
def network_source():
    return load_project(NETWORK)


@pytest.fixture(scope="session")
def network_ir(network_source):
    return lower_to_ir(parse_project(network_source))


@pytest.fixture(scope="session")
def network_graph(network_source):
    return build_graph(network_source)


# -- acceptance summary: one line per criterion, printed after the run

ACCEPTANCE_LINES: list[str] = []


def report_criterion(name: str, ok: bool, detail: str) -> bool:
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
