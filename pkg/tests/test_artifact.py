import copy
from fractions import Fraction

import pytest

from optaudit.artifact import (
    ElementRef,
    Objective,
    SymbolicModel,
    Term,
    VariableDecl,
    build_dependency_graph,
    canonical_json,
    case_bytes,
    identity_plan,
    parse_case,
    render_model_text,
    serialize_case,
    structural_diff,
)
from optaudit.errors import SchemaError, UnresolvedReferenceError

from conftest import minimal_case_doc


def test_minimal_case_parses(minimal_case):
    assert minimal_case.case_id == "mini"
    assert minimal_case.model.objective.sense == "minimize"
    assert minimal_case.model.variable("x").domain == "continuous"


def test_dangling_variable_reference():
    doc = minimal_case_doc()
    doc["model"]["constraints"][0]["lhs_terms"][0]["variable"] = "z"
    with pytest.raises(UnresolvedReferenceError):
        parse_case(doc)


def test_dangling_index_set():
    doc = minimal_case_doc()
    doc["model"]["objective"]["terms"][0]["indices"] = ["ghost"]
    with pytest.raises(UnresolvedReferenceError):
        parse_case(doc)


def test_unknown_rhs_parameter():
    doc = minimal_case_doc()
    doc["model"]["constraints"][0]["rhs"] = "mystery_param"
    with pytest.raises(UnresolvedReferenceError):
        parse_case(doc)


def test_floats_are_rejected():
    doc = minimal_case_doc()
    doc["model"]["objective"]["terms"][0]["coefficient"] = 2.5
    with pytest.raises(SchemaError):
        parse_case(doc)


def test_decimal_strings_become_exact_rationals():
    doc = minimal_case_doc()
    doc["model"]["objective"]["terms"][0]["coefficient"] = "2.5"
    case = parse_case(doc)
    assert case.model.objective.terms[0].coefficient == Fraction(5, 2)


def test_missing_required_field():
    doc = minimal_case_doc()
    del doc["model"]["objective"]
    with pytest.raises(SchemaError):
        parse_case(doc)


def test_schema_requirement_targets_must_be_declared():
    doc = minimal_case_doc()
    doc["problem"]["schema"] = {
        "entities": ["x"],
        "quantities": [],
        "index_sets": [],
        "hard_requirements": [{"kind": "relation", "target": "undeclared_rule", "relation": "<=", "value": 1}],
        "soft_preferences": [],
        "units": {},
    }
    with pytest.raises(UnresolvedReferenceError):
        parse_case(doc)


def test_knapsack_seed_shape(seed_by_id):
    case = seed_by_id["knapsack_small"]
    assert all(v.domain == "binary" for v in case.model.variables)
    assert [c.id for c in case.model.constraints] == ["budget"]
    assert case.model.constraints[0].relation == "<="


def test_parse_serialize_round_trip_on_all_seeds(seeds):
    for case in seeds:
        assert parse_case(serialize_case(case)) == case
        # and the bytes are stable under a second pass
        assert case_bytes(parse_case(serialize_case(case))) == case_bytes(case)


def test_render_model_text_examples():
    model = SymbolicModel(
        objective=Objective("minimize", (Term(Fraction(2), "x"), Term(Fraction(3), "y"))),
        variables=(
            VariableDecl("x", "continuous", lower=Fraction(0), sign="nonneg"),
            VariableDecl("y", "continuous", lower=Fraction(0), sign="nonneg"),
        ),
        constraints=(),
    )
    text = render_model_text(model)
    assert text.splitlines()[0] == "minimize 2*x + 3*y"


def test_render_equality_constraint(minimal_case):
    doc = minimal_case_doc(relation="=")
    doc["model"]["objective"]["terms"].append({"coefficient": 1, "variable": "y"})
    doc["model"]["variables"].append({"name": "y", "domain": "continuous", "lower": 0, "upper": None, "sign": "nonneg"})
    doc["model"]["constraints"][0]["lhs_terms"].append({"coefficient": 1, "variable": "y"})
    text = render_model_text(parse_case(doc).model)
    assert "x + y = 10" in text


def test_render_negative_coefficient_has_no_plus_minus():
    model = SymbolicModel(
        objective=Objective("minimize", (Term(Fraction(-1), "x"), Term(Fraction(-2), "y"))),
        variables=(VariableDecl("x", "continuous"), VariableDecl("y", "continuous")),
        constraints=(),
    )
    text = render_model_text(model)
    assert text.splitlines()[0] == "minimize - x - 2*y"
    assert "+-" not in text and "+ -" not in text


def test_rendering_is_deterministic(seeds):
    for case in seeds:
        assert render_model_text(case.model) == render_model_text(parse_case(serialize_case(case)).model)


def test_identity_plan_is_faithful_shape(minimal_case):
    plan = identity_plan(minimal_case.model)
    assert [r.name for r in plan.registered_variables] == ["x"]
    assert [m.constraint_id for m in plan.materialized_constraints] == ["quota"]
    assert plan.objective.api_sense == "minimize"
    assert plan.readout.objective_readout == "solved_value"


def test_dependency_graph_realizes_and_mentions(seed_by_id):
    case = seed_by_id["diet_blend"]
    graph = build_dependency_graph(case)
    assert any(
        e.kind == "realizes"
        and e.source == ElementRef("model", "constraint", "protein")
        and e.target == ElementRef("plan", "code_object", "protein")
        for e in graph.edges
    )
    assert any(
        e.kind == "realizes" and e.source == ElementRef("model", "variable", "oats") for e in graph.edges
    )
    assert any(
        e.kind == "mentions" and e.target == ElementRef("model", "variable", "oats") for e in graph.edges
    )
    assert graph.expected_missing == ()


def test_dependency_graph_expected_missing():
    doc = minimal_case_doc()
    doc["problem"]["schema"] = {
        "entities": ["x", "budget_total"],
        "quantities": [],
        "index_sets": [],
        "hard_requirements": [{"kind": "relation", "target": "budget_total", "relation": "<=", "value": 100}],
        "soft_preferences": [],
        "units": {},
    }
    graph = build_dependency_graph(parse_case(doc))
    missing = ElementRef("model", "expected_missing", "budget_total")
    assert missing in graph.expected_missing
    assert any(e.target == missing and e.kind == "mentions" for e in graph.edges)


def test_no_dangling_edges_on_seeds(seeds):
    for case in seeds:
        graph = build_dependency_graph(case)
        model_vars = {v.name for v in case.model.variables}
        model_cons = {c.id for c in case.model.constraints}
        for edge in graph.edges:
            for end in (edge.source, edge.target):
                if end.artifact == "model" and end.kind == "variable":
                    assert end.local_id in model_vars
                if end.artifact == "model" and end.kind == "constraint":
                    assert end.local_id in model_cons
                if end.kind == "expected_missing":
                    assert end in graph.expected_missing


def test_structural_diff_localizes_one_edit(seed_by_id):
    case = seed_by_id["diet_blend"]
    doc = copy.deepcopy(serialize_case(case))
    doc["model"]["objective"]["sense"] = "maximize"
    assert structural_diff(case, parse_case(doc)) == [("model", "objective", "sense")]


def test_canonical_json_sorted_and_compact():
    text = canonical_json({"b": 1, "a": [1, 2]})
    assert text == '{"a":[1,2],"b":1}'


def test_duplicate_variable_names_rejected():
    doc = minimal_case_doc()
    doc["model"]["variables"].append(dict(doc["model"]["variables"][0]))
    with pytest.raises(SchemaError):
        parse_case(doc)
