import json

import numpy as np
import pytest

from nlps.dynamics import EvaporationModel, PhysicsParams
from nlps.grid import Field, State, make_grid
from nlps.io_runtime import parse_config
from nlps.kernel import make_bump_kernel, sample_kernel_grids
from nlps.spectral import plan_convolution


def make_plan(n, radius, length=1.0):
    spec = make_grid(n, length)
    kg = sample_kernel_grids(make_bump_kernel(radius), spec)
    return spec, kg, plan_convolution(kg)


def admissible_state(spec, seed):
    """Random state with 0 <= |m| <= phi <= 1."""
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0.05, 0.95, spec.shape)
    m = phi * rng.uniform(-0.9, 0.9, spec.shape)
    return State(Field(spec, m), Field(spec, phi))


def config_from(doc):
    return parse_config(json.dumps(doc))


@pytest.fixture
def plan16():
    return make_plan(16, 0.25)


@pytest.fixture
def evap_params():
    return PhysicsParams(10.0, EvaporationModel("linear", 0.1))


# criterion label -> (ok, detail); filled by test_acceptance, printed at the end
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
