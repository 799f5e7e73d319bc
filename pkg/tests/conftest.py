"""Session-shared solves and deterministic property-test settings.

The expensive fine-grid solves are computed once and reused by the unit and
acceptance tests; report arrays are write-protected, so sharing is safe.
"""

import pytest
from hypothesis import HealthCheck, settings

from fidhvi.contact import get_contact_model, to_problem_spec
from fidhvi.presets import PRESETS, get_preset
from fidhvi.solver import picard_solve

settings.register_profile(
    "suite",
    derandomize=True,
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")

VALID_PRESETS = tuple(name for name, p in PRESETS.items() if p.expected_valid)


@pytest.fixture(scope="session")
def presets_2048():
    """name -> (spec, report) for every solvable preset on the finest grid."""
    out = {}
    for name in VALID_PRESETS:
        spec = get_preset(name).build(cells=2048)
        out[name] = (spec, picard_solve(spec, tol=1e-10))
    return out


@pytest.fixture(scope="session")
def linear_decay_1024():
    spec = get_preset("linear_decay").build(cells=1024)
    return spec, picard_solve(spec, tol=1e-10)


@pytest.fixture(scope="session")
def rod_2048():
    spec = to_problem_spec(get_contact_model("rod_basic"), cells=2048)
    return spec, picard_solve(spec, tol=1e-10)
