import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from proxdeep.network import Architecture, forward_zs, init_params  # noqa: E402
from proxdeep.splitting import SplitState  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(rng, n_layers=None, loss="squared_error", feasible=False, max_n=5,
                    max_width=4, links=("sigmoid", "tanh", "linear")):
    """Random architecture, parameters, inputs and (perturbed) split state."""
    L = n_layers or int(rng.integers(1, 4))
    dims = tuple(int(d) for d in rng.integers(1, max_width + 1, size=L))
    if loss == "multinomial":
        dims = (max(2, dims[0]),) + dims[1:]
    m = int(rng.integers(1, max_width + 1))
    n = int(rng.integers(1, max_n + 1))
    arch = Architecture(m, dims, tuple(rng.choice(links, size=L - 1)), loss)
    params = init_params(arch, int(rng.integers(1 << 30)), 1.0)
    for p in params:
        p[:, 0] = rng.normal(size=p.shape[0])
    x = rng.normal(size=(m, n))
    zs = forward_zs(arch, params, x)
    if not feasible:
        zs = [z + rng.normal(size=z.shape) for z in zs]
    us = [rng.normal(size=z.shape) for z in zs]
    return arch, params, x, SplitState(zs, us)


# Acceptance outcomes, filled in by test_acceptance.py and echoed at the end of the run.
ACCEPTANCE = {}


def record(criterion, ok, detail):
    line = f"CRITERION {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE, key=lambda k: int(k)):
            terminalreporter.write_line(ACCEPTANCE[key])
