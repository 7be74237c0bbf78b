import numpy as np
import pytest

from tvmcaqc.jastrow import JastrowParams, Support


def random_params(inst, seed=0, scale=0.4, support=Support.GRAPH_EDGES):
    rng = np.random.default_rng(seed)
    p = JastrowParams.zeros(inst, support)
    k = p.n_params
    return p.with_flat(scale * (rng.standard_normal(k) + 1j * rng.standard_normal(k)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def report(criterion: str, passed: bool, detail: str) -> bool:
    line = f"CRITERION {criterion}: {'PASS' if passed else 'FAIL'} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
