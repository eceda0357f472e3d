"""Canonical intermediate representation of an audit case.

A case couples three artifacts: the problem statement (optionally with a
gold semantic schema), the symbolic model, and a materialization plan
standing in for solver code. Everything is immutable after construction
and all coefficients are exact rationals, so corruption/repair round
trips can be checked byte-for-byte on the canonical serialization.

Canonical form: variables, constraints, registrations, and materialized
rows are sorted by name/id at serialization time; objective terms and
schema lists keep author order because their order is semantic.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Iterator

from .errors import SchemaError, UnresolvedReferenceError

SENSES = ("minimize", "maximize")
RELATIONS = ("<=", "=", ">=")
DOMAINS = ("continuous", "integer", "binary")
SIGNS = ("nonneg", "nonpos", "free")
REQUIREMENT_KINDS = ("objective_sense", "objective_term", "domain", "relation", "coverage", "bound")

_RATIONAL_RE = re.compile(r"^-?\d+(/\d+)?$")
_DECIMAL_RE = re.compile(r"^-?\d+\.\d+$")


def flip_sense(sense: str) -> str:
    return "maximize" if sense == "minimize" else "minimize"


def flip_relation(relation: str) -> str:
    return {"<=": ">=", ">=": "<=", "=": "="}[relation]


# ---------------------------------------------------------------------------
# rational codec

def decode_number(value: Any, where: str) -> Fraction:
    """Accept ints and exact string forms ('3', '-2/5', '0.25')."""
    if isinstance(value, bool):
        raise SchemaError(f"{where}: expected a number, got a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str) and (_RATIONAL_RE.match(value) or _DECIMAL_RE.match(value)):
        return Fraction(value)
    if isinstance(value, float):
        raise SchemaError(f"{where}: floats are not allowed in the symbolic form, write {value!r} as a string")
    raise SchemaError(f"{where}: cannot read {value!r} as an exact rational")


def encode_number(value: Fraction) -> int | str:
    if value.denominator == 1:
        return int(value)
    return f"{value.numerator}/{value.denominator}"


def decode_rhs(value: Any, where: str = "rhs") -> Fraction | str:
    """Constraint right-hand sides are exact rationals or parameter names."""
    if isinstance(value, str) and not (_RATIONAL_RE.match(value) or _DECIMAL_RE.match(value)):
        return value
    return decode_number(value, where)


def _decode_optional(value: Any, where: str) -> Fraction | None:
    return None if value is None else decode_number(value, where)


def _encode_optional(value: Fraction | None) -> int | str | None:
    return None if value is None else encode_number(value)


# ---------------------------------------------------------------------------
# semantic schema (the gold-side reading of the problem text)

@dataclass(frozen=True)
class Quantity:
    name: str
    value: Fraction
    unit: str = ""


@dataclass(frozen=True)
class IndexSet:
    name: str
    members: tuple[str, ...]


@dataclass(frozen=True)
class RequirementSpec:
    """One machine-checkable hard requirement extracted from the text.

    ``kind`` determines which optional fields matter:
      objective_sense -> sense
      objective_term  -> target (+ optional value = expected coefficient)
      domain          -> target (+ domain and/or sign)
      relation        -> target constraint id, relation, value (+ pooled flag)
      coverage        -> target
      bound           -> target variable, relation ('<='/'>='), value
    """

    kind: str
    target: str = ""
    relation: str | None = None
    value: Fraction | None = None
    sense: str | None = None
    domain: str | None = None
    sign: str | None = None
    pooled: bool = False


@dataclass(frozen=True)
class SemanticSchema:
    entities: tuple[str, ...] = ()
    quantities: tuple[Quantity, ...] = ()
    index_sets: tuple[IndexSet, ...] = ()
    hard_requirements: tuple[RequirementSpec, ...] = ()
    soft_preferences: tuple[str, ...] = ()
    units: tuple[tuple[str, str], ...] = ()

    def requirements(self, kind: str, target: str | None = None) -> Iterator[RequirementSpec]:
        for req in self.hard_requirements:
            if req.kind == kind and (target is None or req.target == target):
                yield req


EMPTY_SCHEMA = SemanticSchema()


# ---------------------------------------------------------------------------
# symbolic model

@dataclass(frozen=True)
class Term:
    coefficient: Fraction
    variable: str
    indices: tuple[str, ...] = ()
    index_filter: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Objective:
    sense: str
    terms: tuple[Term, ...]


@dataclass(frozen=True)
class VariableDecl:
    name: str
    domain: str
    index_sets: tuple[str, ...] = ()
    lower: Fraction | None = None
    upper: Fraction | None = None
    sign: str = "free"


@dataclass(frozen=True)
class ConstraintDecl:
    id: str
    lhs_terms: tuple[Term, ...]
    relation: str
    rhs: Fraction | str  # exact rational or a parameter name
    quantified_over: tuple[str, ...] = ()


@dataclass(frozen=True)
class Aux:
    sets: tuple[IndexSet, ...] = ()
    parameters: tuple[Quantity, ...] = ()


@dataclass(frozen=True)
class SymbolicModel:
    objective: Objective
    variables: tuple[VariableDecl, ...]
    constraints: tuple[ConstraintDecl, ...]
    aux: Aux = Aux()

    def variable(self, name: str) -> VariableDecl | None:
        for decl in self.variables:
            if decl.name == name:
                return decl
        return None

    def constraint(self, cid: str) -> ConstraintDecl | None:
        for con in self.constraints:
            if con.id == cid:
                return con
        return None

    def index_set(self, name: str) -> IndexSet | None:
        for s in self.aux.sets:
            if s.name == name:
                return s
        return None


# ---------------------------------------------------------------------------
# materialization plan (the executable side)

@dataclass(frozen=True)
class RegisteredVariable:
    name: str
    api_domain: str
    api_lower: Fraction | None = None
    api_upper: Fraction | None = None


@dataclass(frozen=True)
class BoundRow:
    """A standalone solver row that encodes a variable bound.

    Allows the equivalent style where a declared bound is materialized as
    an explicit constraint row instead of variable metadata.
    """

    variable: str
    side: str  # "lower" | "upper"
    value: Fraction


@dataclass(frozen=True)
class MaterializedConstraint:
    constraint_id: str
    coverage: str = "full"  # "full" | "partial"
    covered_indices: tuple[tuple[str, ...], ...] = ()
    bound_row: BoundRow | None = None


@dataclass(frozen=True)
class PlanObjective:
    api_sense: str
    coefficient_source: str = "direct"  # "direct" | "negated"
    readout_sign_correction: bool = False


@dataclass(frozen=True)
class Readout:
    reported_variables: tuple[str, ...] = ()
    objective_readout: str = "solved_value"  # "solved_value" | "negated_solved_value" | "stale"


@dataclass(frozen=True)
class RawCode:
    text: str
    language: str = "python"


@dataclass(frozen=True)
class MaterializationPlan:
    registered_variables: tuple[RegisteredVariable, ...]
    materialized_constraints: tuple[MaterializedConstraint, ...]
    objective: PlanObjective
    solver_backend: str = "milp"
    readout: Readout = Readout()
    raw_code: RawCode | None = None

    def registration(self, name: str) -> RegisteredVariable | None:
        for reg in self.registered_variables:
            if reg.name == name:
                return reg
        return None

    def materialization(self, cid: str) -> MaterializedConstraint | None:
        for mat in self.materialized_constraints:
            if mat.constraint_id == cid:
                return mat
        return None

    def effective_sense(self) -> str:
        """Optimization sense after undoing a negated-coefficient wrapper."""
        if self.objective.coefficient_source == "negated":
            return flip_sense(self.objective.api_sense)
        return self.objective.api_sense


# ---------------------------------------------------------------------------
# the audit tuple and its graphs

@dataclass(frozen=True)
class Problem:
    text: str
    schema: SemanticSchema | None = None


@dataclass(frozen=True)
class AuditTuple:
    case_id: str
    problem: Problem
    model: SymbolicModel
    plan: MaterializationPlan
    metadata: tuple[tuple[str, Any], ...] = ()

    def meta(self, key: str, default: Any = None) -> Any:
        for k, v in self.metadata:
            if k == key:
                return v
        return default


@dataclass(frozen=True)
class ElementRef:
    artifact: str  # "problem" | "model" | "plan"
    kind: str  # "objective" | "variable" | "constraint" | "code_object" | "expected_missing"
    local_id: str

    def __str__(self) -> str:
        return f"{self.artifact}/{self.kind}/{self.local_id}"


@dataclass(frozen=True)
class DependencyEdge:
    source: ElementRef
    target: ElementRef
    kind: str  # "mentions" | "realizes" | "constrains"


@dataclass(frozen=True)
class DependencyGraph:
    edges: tuple[DependencyEdge, ...]
    expected_missing: tuple[ElementRef, ...] = ()

    def targets_of(self, source: ElementRef) -> tuple[ElementRef, ...]:
        return tuple(e.target for e in self.edges if e.source == source)


# ---------------------------------------------------------------------------
# parsing

def _require(doc: dict, key: str, where: str) -> Any:
    if key not in doc:
        raise SchemaError(f"{where}: missing required field {key!r}")
    return doc[key]


def _str_field(doc: dict, key: str, where: str, choices: tuple[str, ...] | None = None) -> str:
    value = _require(doc, key, where)
    if not isinstance(value, str) or not value:
        raise SchemaError(f"{where}.{key}: expected a nonempty string")
    if choices and value not in choices:
        raise SchemaError(f"{where}.{key}: {value!r} not in {choices}")
    return value


def _parse_term(doc: dict, where: str) -> Term:
    coeff = decode_number(_require(doc, "coefficient", where), f"{where}.coefficient")
    variable = _str_field(doc, "variable", where)
    indices = tuple(doc.get("indices", ()) or ())
    raw_filter = doc.get("index_filter")
    index_filter = tuple(raw_filter) if raw_filter is not None else None
    return Term(coeff, variable, indices, index_filter)


def _parse_schema(doc: dict) -> SemanticSchema:
    where = "problem.schema"
    quantities = tuple(
        Quantity(q["name"], decode_number(q["value"], f"{where}.quantities"), q.get("unit", ""))
        for q in doc.get("quantities", ())
    )
    index_sets = tuple(IndexSet(s["name"], tuple(s["members"])) for s in doc.get("index_sets", ()))
    reqs = []
    for i, r in enumerate(doc.get("hard_requirements", ())):
        kind = _str_field(r, "kind", f"{where}.hard_requirements[{i}]", REQUIREMENT_KINDS)
        reqs.append(
            RequirementSpec(
                kind=kind,
                target=r.get("target", ""),
                relation=r.get("relation"),
                value=_decode_optional(r.get("value"), f"{where}.hard_requirements[{i}].value"),
                sense=r.get("sense"),
                domain=r.get("domain"),
                sign=r.get("sign"),
                pooled=bool(r.get("pooled", False)),
            )
        )
    schema = SemanticSchema(
        entities=tuple(doc.get("entities", ())),
        quantities=quantities,
        index_sets=index_sets,
        hard_requirements=tuple(reqs),
        soft_preferences=tuple(doc.get("soft_preferences", ())),
        units=tuple(sorted((k, v) for k, v in doc.get("units", {}).items())),
    )
    declared = set(schema.entities) | {q.name for q in quantities} | {s.name for s in index_sets}
    for req in schema.hard_requirements:
        if req.target and req.target not in declared:
            raise UnresolvedReferenceError(
                f"{where}: requirement target {req.target!r} is not a declared entity, quantity, or index set"
            )
    return schema


def _parse_model(doc: dict) -> SymbolicModel:
    obj_doc = _require(doc, "objective", "model")
    objective = Objective(
        sense=_str_field(obj_doc, "sense", "model.objective", SENSES),
        terms=tuple(_parse_term(t, f"model.objective.terms[{i}]") for i, t in enumerate(_require(obj_doc, "terms", "model.objective"))),
    )
    variables = []
    for i, v in enumerate(_require(doc, "variables", "model")):
        where = f"model.variables[{i}]"
        sign = v.get("sign", "free")
        if sign not in SIGNS:
            raise SchemaError(f"{where}.sign: {sign!r} not in {SIGNS}")
        variables.append(
            VariableDecl(
                name=_str_field(v, "name", where),
                domain=_str_field(v, "domain", where, DOMAINS),
                index_sets=tuple(v.get("index_sets", ()) or ()),
                lower=_decode_optional(v.get("lower"), f"{where}.lower"),
                upper=_decode_optional(v.get("upper"), f"{where}.upper"),
                sign=sign,
            )
        )
    constraints = []
    for i, c in enumerate(_require(doc, "constraints", "model")):
        where = f"model.constraints[{i}]"
        rhs = decode_rhs(_require(c, "rhs", where), f"{where}.rhs")
        constraints.append(
            ConstraintDecl(
                id=_str_field(c, "id", where),
                lhs_terms=tuple(_parse_term(t, f"{where}.lhs_terms[{j}]") for j, t in enumerate(_require(c, "lhs_terms", where))),
                relation=_str_field(c, "relation", where, RELATIONS),
                rhs=rhs,
                quantified_over=tuple(c.get("quantified_over", ()) or ()),
            )
        )
    aux_doc = doc.get("aux", {}) or {}
    aux = Aux(
        sets=tuple(IndexSet(s["name"], tuple(s["members"])) for s in aux_doc.get("sets", ())),
        parameters=tuple(
            Quantity(p["name"], decode_number(p["value"], "model.aux.parameters"), p.get("unit", ""))
            for p in aux_doc.get("parameters", ())
        ),
    )
    # Canonical in-memory order: declarations by name, constraints by id.
    variables.sort(key=lambda v: v.name)
    constraints.sort(key=lambda c: c.id)
    return SymbolicModel(objective, tuple(variables), tuple(constraints), aux)


def _validate_model_refs(model: SymbolicModel) -> None:
    var_names = {v.name for v in model.variables}
    if len(var_names) != len(model.variables):
        raise SchemaError("model.variables: duplicate variable names")
    con_ids = [c.id for c in model.constraints]
    if len(set(con_ids)) != len(con_ids):
        raise SchemaError("model.constraints: duplicate constraint ids")
    set_names = {s.name for s in model.aux.sets}
    param_names = {p.name for p in model.aux.parameters}

    def check_term(term: Term, where: str) -> None:
        if term.variable not in var_names:
            raise UnresolvedReferenceError(f"{where}: term references undeclared variable {term.variable!r}")
        for idx in term.indices:
            if idx not in set_names:
                raise UnresolvedReferenceError(f"{where}: term binds undeclared index set {idx!r}")
        if term.index_filter is not None:
            if not term.indices:
                raise SchemaError(f"{where}: index_filter on an unindexed term")
            members = set()
            for idx in term.indices:
                members |= set(next(s.members for s in model.aux.sets if s.name == idx))
            unknown = set(term.index_filter) - members
            if unknown:
                raise UnresolvedReferenceError(f"{where}: index_filter names unknown members {sorted(unknown)}")

    for i, term in enumerate(model.objective.terms):
        check_term(term, f"model.objective.terms[{i}]")
    for con in model.constraints:
        for j, term in enumerate(con.lhs_terms):
            check_term(term, f"model.constraints[{con.id}].lhs_terms[{j}]")
        if isinstance(con.rhs, str) and con.rhs not in param_names:
            raise UnresolvedReferenceError(f"model.constraints[{con.id}]: rhs parameter {con.rhs!r} is undeclared")
        for idx in con.quantified_over:
            if idx not in set_names:
                raise UnresolvedReferenceError(f"model.constraints[{con.id}]: quantified over undeclared set {idx!r}")
    for decl in model.variables:
        for idx in decl.index_sets:
            if idx not in set_names:
                raise UnresolvedReferenceError(f"model.variables[{decl.name}]: undeclared index set {idx!r}")


def _parse_plan(doc: dict) -> MaterializationPlan:
    regs = [
        RegisteredVariable(
            name=_str_field(r, "name", f"plan.registered_variables[{i}]"),
            api_domain=_str_field(r, "api_domain", f"plan.registered_variables[{i}]", DOMAINS),
            api_lower=_decode_optional(r.get("api_lower"), "plan.registered_variables.api_lower"),
            api_upper=_decode_optional(r.get("api_upper"), "plan.registered_variables.api_upper"),
        )
        for i, r in enumerate(doc.get("registered_variables", ()))
    ]
    mats = []
    for i, m in enumerate(doc.get("materialized_constraints", ())):
        where = f"plan.materialized_constraints[{i}]"
        coverage = m.get("coverage", "full")
        if coverage not in ("full", "partial"):
            raise SchemaError(f"{where}.coverage: {coverage!r} not in ('full', 'partial')")
        row_doc = m.get("bound_row")
        bound_row = None
        if row_doc is not None:
            bound_row = BoundRow(
                variable=_str_field(row_doc, "variable", f"{where}.bound_row"),
                side=_str_field(row_doc, "side", f"{where}.bound_row", ("lower", "upper")),
                value=decode_number(_require(row_doc, "value", f"{where}.bound_row"), f"{where}.bound_row.value"),
            )
        mats.append(
            MaterializedConstraint(
                constraint_id=_str_field(m, "constraint_id", where),
                coverage=coverage,
                covered_indices=tuple(tuple(t) for t in m.get("covered_indices", ())),
                bound_row=bound_row,
            )
        )
    obj_doc = _require(doc, "objective", "plan")
    source = obj_doc.get("coefficient_source", "direct")
    if source not in ("direct", "negated"):
        raise SchemaError(f"plan.objective.coefficient_source: {source!r} not in ('direct', 'negated')")
    readout_doc = doc.get("readout", {}) or {}
    readout_kind = readout_doc.get("objective_readout", "solved_value")
    if readout_kind not in ("solved_value", "negated_solved_value", "stale"):
        raise SchemaError(f"plan.readout.objective_readout: {readout_kind!r} is not a known readout")
    raw_doc = doc.get("raw_code")
    return MaterializationPlan(
        registered_variables=tuple(sorted(regs, key=lambda r: r.name)),
        materialized_constraints=tuple(sorted(mats, key=lambda m: m.constraint_id)),
        objective=PlanObjective(
            api_sense=_str_field(obj_doc, "api_sense", "plan.objective", SENSES),
            coefficient_source=source,
            readout_sign_correction=bool(obj_doc.get("readout_sign_correction", False)),
        ),
        solver_backend=doc.get("solver_backend", "milp"),
        readout=Readout(
            reported_variables=tuple(readout_doc.get("reported_variables", ())),
            objective_readout=readout_kind,
        ),
        raw_code=RawCode(raw_doc["text"], raw_doc.get("language", "python")) if raw_doc else None,
    )


def parse_case(document: dict) -> AuditTuple:
    """Parse and validate one case document into an AuditTuple.

    Reference integrity (variables, index sets, parameters) is enforced
    hard; numeric sanity of declared bounds is deliberately not a parse
    error, because crossed or missing bounds are exactly the kind of
    defect the auditor must be able to represent.
    """
    if not isinstance(document, dict):
        raise SchemaError("case document must be an object")
    case_id = _str_field(document, "case_id", "case")
    problem_doc = _require(document, "problem", "case")
    text = _require(problem_doc, "text", "problem")
    if not isinstance(text, str):
        raise SchemaError("problem.text must be a string")
    schema = _parse_schema(problem_doc["schema"]) if problem_doc.get("schema") else None
    model = _parse_model(_require(document, "model", "case"))
    _validate_model_refs(model)
    plan = _parse_plan(_require(document, "plan", "case"))
    metadata = tuple(sorted((document.get("metadata") or {}).items()))
    return AuditTuple(case_id=case_id, problem=Problem(text, schema), model=model, plan=plan, metadata=metadata)


# ---------------------------------------------------------------------------
# serialization

def _term_doc(term: Term) -> dict:
    doc: dict[str, Any] = {"coefficient": encode_number(term.coefficient), "variable": term.variable}
    if term.indices:
        doc["indices"] = list(term.indices)
    if term.index_filter is not None:
        doc["index_filter"] = list(term.index_filter)
    return doc


def _schema_doc(schema: SemanticSchema) -> dict:
    reqs = []
    for r in schema.hard_requirements:
        d: dict[str, Any] = {"kind": r.kind}
        if r.target:
            d["target"] = r.target
        for key, value in (("relation", r.relation), ("sense", r.sense), ("domain", r.domain), ("sign", r.sign)):
            if value is not None:
                d[key] = value
        if r.value is not None:
            d["value"] = encode_number(r.value)
        if r.pooled:
            d["pooled"] = True
        reqs.append(d)
    return {
        "entities": list(schema.entities),
        "quantities": [{"name": q.name, "value": encode_number(q.value), "unit": q.unit} for q in schema.quantities],
        "index_sets": [{"name": s.name, "members": list(s.members)} for s in schema.index_sets],
        "hard_requirements": reqs,
        "soft_preferences": list(schema.soft_preferences),
        "units": dict(schema.units),
    }


def serialize_case(case: AuditTuple) -> dict:
    """Canonical document form; sorted collections make output stable."""
    model = case.model
    plan = case.plan
    doc: dict[str, Any] = {
        "case_id": case.case_id,
        "problem": {"text": case.problem.text},
        "model": {
            "objective": {"sense": model.objective.sense, "terms": [_term_doc(t) for t in model.objective.terms]},
            "variables": [
                {
                    "name": v.name,
                    "domain": v.domain,
                    "index_sets": list(v.index_sets),
                    "lower": _encode_optional(v.lower),
                    "upper": _encode_optional(v.upper),
                    "sign": v.sign,
                }
                for v in sorted(model.variables, key=lambda v: v.name)
            ],
            "constraints": [
                {
                    "id": c.id,
                    "lhs_terms": [_term_doc(t) for t in c.lhs_terms],
                    "relation": c.relation,
                    "rhs": encode_number(c.rhs) if isinstance(c.rhs, Fraction) else c.rhs,
                    "quantified_over": list(c.quantified_over),
                }
                for c in sorted(model.constraints, key=lambda c: c.id)
            ],
            "aux": {
                "sets": [{"name": s.name, "members": list(s.members)} for s in model.aux.sets],
                "parameters": [
                    {"name": p.name, "value": encode_number(p.value), "unit": p.unit} for p in model.aux.parameters
                ],
            },
        },
        "plan": {
            "registered_variables": [
                {
                    "name": r.name,
                    "api_domain": r.api_domain,
                    "api_lower": _encode_optional(r.api_lower),
                    "api_upper": _encode_optional(r.api_upper),
                }
                for r in sorted(plan.registered_variables, key=lambda r: r.name)
            ],
            "materialized_constraints": [
                {
                    "constraint_id": m.constraint_id,
                    "coverage": m.coverage,
                    **({"covered_indices": [list(t) for t in m.covered_indices]} if m.covered_indices else {}),
                    **(
                        {
                            "bound_row": {
                                "variable": m.bound_row.variable,
                                "side": m.bound_row.side,
                                "value": encode_number(m.bound_row.value),
                            }
                        }
                        if m.bound_row
                        else {}
                    ),
                }
                for m in sorted(plan.materialized_constraints, key=lambda m: m.constraint_id)
            ],
            "objective": {
                "api_sense": plan.objective.api_sense,
                "coefficient_source": plan.objective.coefficient_source,
                "readout_sign_correction": plan.objective.readout_sign_correction,
            },
            "solver_backend": plan.solver_backend,
            "readout": {
                "reported_variables": list(plan.readout.reported_variables),
                "objective_readout": plan.readout.objective_readout,
            },
        },
        "metadata": dict(case.metadata),
    }
    if case.problem.schema is not None:
        doc["problem"]["schema"] = _schema_doc(case.problem.schema)
    if plan.raw_code is not None:
        doc["plan"]["raw_code"] = {"text": plan.raw_code.text, "language": plan.raw_code.language}
    return doc


def canonical_json(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def case_bytes(case: AuditTuple) -> bytes:
    return canonical_json(serialize_case(case)).encode("utf-8")


# ---------------------------------------------------------------------------
# rendering

def _format_coefficient(coeff: Fraction) -> str:
    mag = abs(coeff)
    if mag == 1:
        return ""
    if mag.denominator == 1:
        return f"{mag.numerator}*"
    return f"{mag.numerator}/{mag.denominator}*"


def _render_term(term: Term) -> str:
    body = f"{_format_coefficient(term.coefficient)}{term.variable}"
    if term.indices:
        sets = ",".join(term.indices)
        if term.index_filter is not None:
            sets += "{" + "|".join(term.index_filter) + "}"
        body = f"sum({sets}) {body}"
    return body


def _render_expression(terms: tuple[Term, ...]) -> str:
    if not terms:
        return "0"
    parts: list[str] = []
    for i, term in enumerate(terms):
        body = _render_term(term)
        if i == 0:
            parts.append(f"- {body}" if term.coefficient < 0 else body)
        else:
            parts.append(f"{'-' if term.coefficient < 0 else '+'} {body}")
    return " ".join(parts)


def render_model_text(model: SymbolicModel) -> str:
    """Deterministic plain-text algebraic rendering used in prompts and
    reports; equal models render to byte-identical text."""
    lines = [f"{model.objective.sense} {_render_expression(model.objective.terms)}"]
    if model.constraints:
        lines.append("subject to:")
        for con in model.constraints:
            quant = f" for all {','.join(con.quantified_over)}" if con.quantified_over else ""
            rhs = encode_number(con.rhs) if isinstance(con.rhs, Fraction) else con.rhs
            lines.append(f"  {con.id}: {_render_expression(con.lhs_terms)} {con.relation} {rhs}{quant}")
    if model.variables:
        lines.append("variables:")
        for decl in model.variables:
            lo = encode_number(decl.lower) if decl.lower is not None else "-inf"
            hi = encode_number(decl.upper) if decl.upper is not None else "+inf"
            idx = f"[{','.join(decl.index_sets)}]" if decl.index_sets else ""
            lines.append(f"  {decl.name}{idx}: {decl.domain} in [{lo}, {hi}], {decl.sign}")
    if model.aux.sets:
        lines.append("sets:")
        for s in model.aux.sets:
            lines.append(f"  {s.name} = {{{', '.join(s.members)}}}")
    return "\n".join(lines)


def render_plan_text(plan: MaterializationPlan) -> str:
    obj = plan.objective
    lines = [
        f"solver backend: {plan.solver_backend}",
        f"objective: api_sense={obj.api_sense} coefficients={obj.coefficient_source} "
        f"readout_sign_correction={str(obj.readout_sign_correction).lower()}",
        "registered variables:",
    ]
    for reg in sorted(plan.registered_variables, key=lambda r: r.name):
        lo = encode_number(reg.api_lower) if reg.api_lower is not None else "-inf"
        hi = encode_number(reg.api_upper) if reg.api_upper is not None else "+inf"
        lines.append(f"  {reg.name}: {reg.api_domain} in [{lo}, {hi}]")
    lines.append("materialized constraints:")
    for mat in sorted(plan.materialized_constraints, key=lambda m: m.constraint_id):
        extra = ""
        if mat.coverage == "partial":
            extra = f" over {[list(t) for t in mat.covered_indices]}"
        if mat.bound_row:
            extra = f" (bound row: {mat.bound_row.variable} {mat.bound_row.side} {encode_number(mat.bound_row.value)})"
        lines.append(f"  {mat.constraint_id}: {mat.coverage}{extra}")
    lines.append(
        f"readout: variables={list(plan.readout.reported_variables)} objective={plan.readout.objective_readout}"
    )
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# dependency graph

_REQ_KIND_TO_ELEMENT = {
    "objective_sense": "objective",
    "objective_term": "objective",
    "domain": "variable",
    "bound": "variable",
    "relation": "constraint",
    "coverage": "constraint",
}


def build_dependency_graph(case: AuditTuple) -> DependencyGraph:
    """Link semantically related objects across the three artifacts.

    Realizes edges: model constraint -> plan materialization, model
    variable -> plan registration. Mentions edges: schema hard
    requirement -> model element sharing its target name; requirements
    with no counterpart produce expected-missing refs.
    """
    edges: list[DependencyEdge] = []
    missing: list[ElementRef] = []
    model, plan = case.model, case.plan

    for con in model.constraints:
        if plan.materialization(con.id) is not None:
            edges.append(
                DependencyEdge(
                    ElementRef("model", "constraint", con.id),
                    ElementRef("plan", "code_object", con.id),
                    "realizes",
                )
            )
    for decl in model.variables:
        if plan.registration(decl.name) is not None:
            edges.append(
                DependencyEdge(
                    ElementRef("model", "variable", decl.name),
                    ElementRef("plan", "code_object", decl.name),
                    "realizes",
                )
            )

    schema = case.problem.schema
    if schema is not None:
        for req in schema.hard_requirements:
            elem_kind = _REQ_KIND_TO_ELEMENT[req.kind]
            source = ElementRef("problem", elem_kind, req.target or "objective")
            target: ElementRef | None = None
            if elem_kind == "objective":
                target = ElementRef("model", "objective", "objective")
                if req.kind == "objective_term" and not any(
                    t.variable == req.target for t in model.objective.terms
                ):
                    target = None
            elif elem_kind == "variable":
                if model.variable(req.target) is not None:
                    target = ElementRef("model", "variable", req.target)
            else:
                if model.constraint(req.target) is not None:
                    target = ElementRef("model", "constraint", req.target)
            if target is None:
                ref = ElementRef("model", "expected_missing", req.target or "objective")
                if ref not in missing:
                    missing.append(ref)
                edges.append(DependencyEdge(source, ref, "mentions"))
            else:
                edges.append(DependencyEdge(source, target, "mentions"))

    return DependencyGraph(tuple(edges), tuple(missing))


# ---------------------------------------------------------------------------
# identity materializer

def identity_plan(
    model: SymbolicModel,
    solver_backend: str = "milp",
    raw_code: RawCode | None = None,
) -> MaterializationPlan:
    """The faithful plan for a model: every variable registered with its
    declared domain and bounds, every constraint fully materialized, a
    direct objective, and a plain solved-value readout."""
    return MaterializationPlan(
        registered_variables=tuple(
            RegisteredVariable(v.name, v.domain, v.lower, v.upper)
            for v in sorted(model.variables, key=lambda v: v.name)
        ),
        materialized_constraints=tuple(
            MaterializedConstraint(c.id) for c in sorted(model.constraints, key=lambda c: c.id)
        ),
        objective=PlanObjective(api_sense=model.objective.sense),
        solver_backend=solver_backend,
        readout=Readout(
            reported_variables=tuple(sorted(v.name for v in model.variables)),
            objective_readout="solved_value",
        ),
        raw_code=raw_code,
    )


# ---------------------------------------------------------------------------
# structural diff (site-level, used by the injector round-trip checks)

def _site_map(case: AuditTuple) -> dict[tuple, Any]:
    sites: dict[tuple, Any] = {
        ("problem", "text"): case.problem.text,
        ("problem", "schema"): case.problem.schema,
        ("model", "objective", "sense"): case.model.objective.sense,
        ("model", "objective", "terms"): case.model.objective.terms,
        ("model", "aux"): case.model.aux,
        ("plan", "objective"): case.plan.objective,
        ("plan", "readout"): case.plan.readout,
        ("plan", "backend"): case.plan.solver_backend,
        ("plan", "raw_code"): case.plan.raw_code,
        ("metadata",): case.metadata,
    }
    for decl in case.model.variables:
        sites[("model", "variable", decl.name)] = decl
    for con in case.model.constraints:
        sites[("model", "constraint", con.id)] = con
    for reg in case.plan.registered_variables:
        sites[("plan", "registration", reg.name)] = reg
    for mat in case.plan.materialized_constraints:
        sites[("plan", "materialization", mat.constraint_id)] = mat
    return sites


def structural_diff(a: AuditTuple, b: AuditTuple) -> list[tuple]:
    """Semantic sites whose content differs between two cases."""
    sa, sb = _site_map(a), _site_map(b)
    changed = [site for site in sorted(set(sa) | set(sb)) if sa.get(site) != sb.get(site)]
    return changed


__all__ = [
    "AuditTuple",
    "Aux",
    "BoundRow",
    "ConstraintDecl",
    "DependencyEdge",
    "DependencyGraph",
    "ElementRef",
    "EMPTY_SCHEMA",
    "IndexSet",
    "MaterializationPlan",
    "MaterializedConstraint",
    "Objective",
    "PlanObjective",
    "Problem",
    "Quantity",
    "RawCode",
    "Readout",
    "RegisteredVariable",
    "RequirementSpec",
    "SemanticSchema",
    "SymbolicModel",
    "Term",
    "VariableDecl",
    "build_dependency_graph",
    "canonical_json",
    "case_bytes",
    "decode_number",
    "encode_number",
    "flip_relation",
    "flip_sense",
    "identity_plan",
    "parse_case",
    "render_model_text",
    "render_plan_text",
    "serialize_case",
    "structural_diff",
]
