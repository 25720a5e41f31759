import numpy as np
import pytest

from mars.bundle_io import MaskProposal
from mars.transport import TransportProblem

# verdict lines recorded by the acceptance tests, echoed after the run
CRITERIA: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not CRITERIA:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("release criteria", sep="-")
    for line in CRITERIA:
        terminalreporter.write_line(line)


def proposals_from_masks(masks):
    return [MaskProposal(id=i, mask_full=m) for i, m in enumerate(masks)]


def random_problem(rng, max_side=8, cell_cap=64):
    """Random balanced transport problem, degenerate flavors included."""
    n = int(rng.integers(1, max_side + 1))
    m = int(rng.integers(1, max_side + 1))
    while n * m > cell_cap:
        m = int(rng.integers(1, max_side + 1))
    cost = rng.random((n, m))
    style = int(rng.integers(0, 4))
    if style == 0:
        supply = np.full(n, 1.0 / n)
        demand = np.full(m, 1.0 / m)
    elif style == 1:
        cost = np.round(cost, 1)
        supply = rng.random(n) + 1e-3
        supply /= supply.sum()
        demand = rng.random(m) + 1e-3
        demand /= demand.sum()
    else:
        supply = rng.random(n) + 1e-3
        supply /= supply.sum()
        demand = rng.random(m) + 1e-3
        demand /= demand.sum()
    return TransportProblem(cost=cost, supply=supply, demand=demand)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
