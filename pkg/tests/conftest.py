import json

import pytest

from optaudit.artifact import parse_case
from optaudit.config import load_config
from optaudit.gateway import HeuristicStubBackend, ReplayBackend
from optaudit.seeds import load_bundled_seeds
from optaudit.taxonomy import load_registry


@pytest.fixture(scope="session")
def registry():
    return load_registry()


@pytest.fixture(scope="session")
def seeds():
    return load_bundled_seeds()


@pytest.fixture(scope="session")
def seed_by_id(seeds):
    return {case.case_id: case for case in seeds}


@pytest.fixture()
def config():
    return load_config()


@pytest.fixture()
def heuristic_backend():
    return HeuristicStubBackend()


@pytest.fixture()
def replay_setup(tmp_path):
    """(backend, config, store) wired to a temp fixture directory."""
    fixture_dir = tmp_path / "fixtures"
    fixture_dir.mkdir()
    config = load_config(overrides={"gateway": {"backend": "replay", "fixture_dir": str(fixture_dir)}})
    backend = ReplayBackend(fixture_dir)

    def store(request, payload) -> None:
        text = payload if isinstance(payload, str) else json.dumps(payload)
        ReplayBackend.store(fixture_dir, request, text)

    return backend, config, store


def minimal_case_doc(case_id="mini", sense="minimize", relation="<="):
    """Smallest well-formed case: one variable, one constraint."""
    return {
        "case_id": case_id,
        "problem": {"text": "keep spending at the least while meeting the quota"},
        "model": {
            "objective": {"sense": sense, "terms": [{"coefficient": 2, "variable": "x"}]},
            "variables": [
                {"name": "x", "domain": "continuous", "lower": 0, "upper": None, "sign": "nonneg"}
            ],
            "constraints": [
                {"id": "quota", "lhs_terms": [{"coefficient": 1, "variable": "x"}], "relation": relation, "rhs": 10}
            ],
            "aux": {"sets": [], "parameters": []},
        },
        "plan": {
            "registered_variables": [
                {"name": "x", "api_domain": "continuous", "api_lower": 0, "api_upper": None}
            ],
            "materialized_constraints": [{"constraint_id": "quota", "coverage": "full"}],
            "objective": {"api_sense": sense, "coefficient_source": "direct", "readout_sign_correction": False},
            "solver_backend": "milp",
            "readout": {"reported_variables": ["x"], "objective_readout": "solved_value"},
        },
        "metadata": {},
    }


@pytest.fixture()
def minimal_case():
    return parse_case(minimal_case_doc())
