from dataclasses import replace

import pytest

from optaudit.artifact import parse_case
from optaudit.contracts import STATUS_INAPPLICABLE, check_plan_fidelity, check_raw_code
from optaudit.injector import RECIPES_BY_CODE, inject_at

from conftest import minimal_case_doc


def _fails(report):
    return {c.check_id: c for c in report.fails()}


def _fidelity(case, registry):
    return check_plan_fidelity(case.model, case.plan, registry)


def test_sense_fail_direct(registry):
    doc = minimal_case_doc()
    doc["plan"]["objective"]["api_sense"] = "maximize"
    report = _fidelity(parse_case(doc), registry)
    fails = _fails(report)
    assert set(fails) == {"SENSE"}
    assert fails["SENSE"].suggested_label.code == "4.1.1"
    assert fails["SENSE"].evidence


def test_sign_flip_wrapper_is_faithful(registry, seed_by_id):
    case = seed_by_id["profit_wrapper"]
    assert case.plan.objective.coefficient_source == "negated"
    assert case.plan.objective.api_sense == "minimize"
    assert case.model.objective.sense == "maximize"
    assert _fidelity(case, registry).is_clean


def test_wrapper_without_readout_correction_fails_readout(registry, seed_by_id):
    case = seed_by_id["profit_wrapper"]
    plan = replace(case.plan, readout=replace(case.plan.readout, objective_readout="solved_value"))
    fails = _fails(check_plan_fidelity(case.model, plan, registry))
    assert set(fails) == {"READOUT"}
    assert fails["READOUT"].suggested_label.code == "4.5.2"


def test_missing_materialization(registry):
    doc = minimal_case_doc()
    doc["plan"]["materialized_constraints"] = []
    fails = _fails(_fidelity(parse_case(doc), registry))
    assert set(fails) == {"MATERIALIZATION:quota"}
    assert fails["MATERIALIZATION:quota"].suggested_label.code == "4.1.2"


def test_partial_expansion(registry, seed_by_id):
    case = seed_by_id["fleet_trips"]
    mats = tuple(
        replace(m, coverage="partial", covered_indices=(("r1",),)) if m.constraint_id == "demand" else m
        for m in case.plan.materialized_constraints
    )
    fails = _fails(check_plan_fidelity(case.model, replace(case.plan, materialized_constraints=mats), registry))
    assert set(fails) == {"MATERIALIZATION:demand"}
    assert fails["MATERIALIZATION:demand"].suggested_label.code == "4.3.2"


def test_missing_registration_marks_dependents_inapplicable(registry):
    doc = minimal_case_doc()
    doc["plan"]["registered_variables"] = []
    report = _fidelity(parse_case(doc), registry)
    fails = _fails(report)
    assert set(fails) == {"REGISTRATION:x"}
    assert fails["REGISTRATION:x"].suggested_label.code == "4.1.3"
    statuses = {c.check_id: c.status for c in report.checks}
    assert statuses["API_DOMAIN:x"] == STATUS_INAPPLICABLE
    assert statuses["BOUNDS:x"] == STATUS_INAPPLICABLE


def test_api_domain_mismatch(registry):
    doc = minimal_case_doc()
    doc["plan"]["registered_variables"][0]["api_domain"] = "integer"
    fails = _fails(_fidelity(parse_case(doc), registry))
    assert set(fails) == {"API_DOMAIN:x"}
    assert fails["API_DOMAIN:x"].suggested_label.code == "4.2.1"


def test_bounds_mismatch_and_bound_row_suppression(registry, seed_by_id):
    doc = minimal_case_doc()
    doc["model"]["variables"][0]["upper"] = 10
    doc["plan"]["registered_variables"][0]["api_upper"] = 4
    fails = _fails(_fidelity(parse_case(doc), registry))
    assert set(fails) == {"BOUNDS:x"}
    assert fails["BOUNDS:x"].suggested_label.code == "4.2.2"
    # the bound-as-row style seed carries the same bound as an explicit row
    assert _fidelity(seed_by_id["bound_row_style"], registry).is_clean


def test_stale_readout(registry):
    doc = minimal_case_doc()
    doc["plan"]["readout"]["objective_readout"] = "stale"
    fails = _fails(_fidelity(parse_case(doc), registry))
    assert set(fails) == {"READOUT"}
    assert fails["READOUT"].suggested_label.code == "4.5.3"


def test_lp_only_backend_with_discrete_domains(registry):
    doc = minimal_case_doc()
    doc["model"]["variables"][0]["domain"] = "integer"
    doc["plan"]["registered_variables"][0]["api_domain"] = "integer"
    doc["plan"]["solver_backend"] = "linprog"
    fails = _fails(_fidelity(parse_case(doc), registry))
    assert set(fails) == {"SOLVER_COMPAT"}
    assert fails["SOLVER_COMPAT"].suggested_label.code == "4.4.2"


def test_faithful_seeds_are_clean(registry, seeds):
    for case in seeds:
        report = _fidelity(case, registry)
        assert report.is_clean, (case.case_id, [c.check_id for c in report.fails()])
        raw = check_raw_code(case.plan.raw_code.text if case.plan.raw_code else None)
        assert raw.is_clean, (case.case_id, [c.check_id for c in raw.fails()])


_PAIRED_CHECK = {
    "4.1.1": "SENSE",
    "4.1.2": "MATERIALIZATION",
    "4.1.3": "REGISTRATION",
    "4.2.1": "API_DOMAIN",
    "4.5.2": "READOUT",
}


@pytest.mark.parametrize("code", sorted(_PAIRED_CHECK))
def test_each_implementation_recipe_fails_exactly_its_check(code, registry, seeds):
    recipe = RECIPES_BY_CODE[code]
    hit_somewhere = False
    for seed in seeds:
        for site in recipe.applicable(seed):
            injected = inject_at(recipe, seed, site, 0, registry)
            fails = _fails(_fidelity(injected.case, registry))
            assert len(fails) == 1, (seed.case_id, site, sorted(fails))
            check_id = next(iter(fails))
            assert check_id.split(":", 1)[0] == _PAIRED_CHECK[code]
            assert fails[check_id].suggested_label.code == code
            hit_somewhere = True
    assert hit_somewhere


def test_raw_code_placeholder():
    report = check_raw_code("def solve_model():\n    # TODO finish this\n    pass\n")
    assert "PLACEHOLDER" in _fails(report)


def test_raw_code_missing_entry_point():
    report = check_raw_code("def main():\n    pass\n")
    assert "ENTRY" in _fails(report)


def test_raw_code_contradictory_sense_tokens():
    text = "def solve_model():\n    a = 'minimize'\n    b = 'maximize'\n"
    assert "SENSE_TOKEN" in _fails(check_raw_code(text))


def test_raw_code_unknown_api_token():
    text = "def solve_model():\n    model.addVariabel('x')\n"
    fails = _fails(check_raw_code(text))
    assert "API_TOKEN" in fails
    assert "addVariabel" in fails["API_TOKEN"].evidence[0]


def test_empty_raw_code_inapplicable():
    report = check_raw_code(None)
    assert all(c.status == STATUS_INAPPLICABLE for c in report.checks)
    assert report.is_clean


def test_every_fail_has_evidence(registry, seeds):
    for seed in seeds:
        for code, recipe in RECIPES_BY_CODE.items():
            if not code.startswith("4"):
                continue
            for site in recipe.applicable(seed):
                injected = inject_at(recipe, seed, site, 1, registry)
                for check in _fidelity(injected.case, registry).fails():
                    assert check.evidence
