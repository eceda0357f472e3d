"""Taxonomy-grounded single-error corruption of clean cases.

Each recipe edits exactly one semantic site of a seed case, never touches
the gold schema annotation, keeps the case parseable, and records enough
provenance (recipe, site, rng seed, undo fragment) that the exact seed
bytes can be restored. Site choice among the applicable candidates is the
only randomized step and it is driven by the caller's seed.

Applicability predicates are deliberately conservative: symbolic-family
recipes require the schema to pin down the edited fact, so a corrupted
case carries exactly one defensible gold label and stays detectable by
the deterministic differs.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, replace

from .artifact import (
    AuditTuple,
    ConstraintDecl,
    MaterializedConstraint,
    RegisteredVariable,
    Term,
    decode_number,
    decode_rhs,
    encode_number,
    flip_relation,
    flip_sense,
)
from .contracts import DEFAULT_LP_ONLY_BACKENDS
from .errors import NotApplicableError, SchemaError
from .taxonomy import LabelPath, TaxonomyRegistry

Site = tuple[str, ...]


@dataclass(frozen=True)
class InjectionRecipe:
    code: str
    name: str
    repair: str  # the documented inverse edit

    def applicable(self, case: AuditTuple) -> list[Site]:
        return _APPLICABLE[self.code](case)

    def transform(self, case: AuditTuple, site: Site) -> tuple[AuditTuple, dict]:
        return _TRANSFORM[self.code](case, site)

    def invert(self, case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
        return _INVERT[self.code](case, site, undo)


@dataclass(frozen=True)
class InjectedCase:
    case: AuditTuple
    gold: LabelPath
    provenance: dict


@dataclass(frozen=True)
class CoverageRow:
    code: str
    name: str
    applicable_sites: int
    built: int
    status: str  # "full" | "partial" | "shortage"


# ---------------------------------------------------------------------------
# shared edit helpers

def _with_model(case: AuditTuple, **kwargs) -> AuditTuple:
    return replace(case, model=replace(case.model, **kwargs))


def _with_objective(case: AuditTuple, **kwargs) -> AuditTuple:
    return _with_model(case, objective=replace(case.model.objective, **kwargs))


def _with_plan(case: AuditTuple, **kwargs) -> AuditTuple:
    return replace(case, plan=replace(case.plan, **kwargs))


def _replace_variable(case: AuditTuple, name: str, **kwargs) -> AuditTuple:
    decls = tuple(replace(v, **kwargs) if v.name == name else v for v in case.model.variables)
    return _with_model(case, variables=decls)


def _replace_constraint(case: AuditTuple, cid: str, **kwargs) -> AuditTuple:
    cons = tuple(replace(c, **kwargs) if c.id == cid else c for c in case.model.constraints)
    return _with_model(case, constraints=cons)


def _replace_term(case: AuditTuple, index: int, **kwargs) -> AuditTuple:
    terms = list(case.model.objective.terms)
    terms[index] = replace(terms[index], **kwargs)
    return _with_objective(case, terms=tuple(terms))


def _schema_of(case: AuditTuple):
    return case.problem.schema


def _term_req(case: AuditTuple, variable: str):
    schema = _schema_of(case)
    if schema is None:
        return None
    return next((r for r in schema.requirements("objective_term", variable)), None)


def _domain_req(case: AuditTuple, name: str, want: str | None = None, sign: str | None = None):
    schema = _schema_of(case)
    if schema is None:
        return None
    for req in schema.requirements("domain", name):
        if want is not None and req.domain == want:
            return req
        if sign is not None and req.sign == sign:
            return req
    return None


def _bound_req(case: AuditTuple, name: str, relation: str):
    schema = _schema_of(case)
    if schema is None:
        return None
    return next((r for r in schema.requirements("bound", name) if r.relation == relation), None)


def _relation_req(case: AuditTuple, cid: str):
    schema = _schema_of(case)
    if schema is None:
        return None
    return next((r for r in schema.requirements("relation", cid)), None)


def _term_doc(term: Term) -> dict:
    return {
        "coefficient": encode_number(term.coefficient),
        "variable": term.variable,
        "indices": list(term.indices),
        "index_filter": list(term.index_filter) if term.index_filter is not None else None,
    }


def _term_from_doc(doc: dict) -> Term:
    return Term(
        coefficient=decode_number(doc["coefficient"], "undo.term"),
        variable=doc["variable"],
        indices=tuple(doc["indices"]),
        index_filter=tuple(doc["index_filter"]) if doc["index_filter"] is not None else None,
    )


# ---------------------------------------------------------------------------
# recipe implementations: (applicable, transform, invert) keyed by code

def _app_1_1_1(case: AuditTuple) -> list[Site]:
    return [("model", "objective", "sense")]


def _tr_1_1_1(case: AuditTuple, site: Site):
    return _with_objective(case, sense=flip_sense(case.model.objective.sense)), {}


def _inv_1_1_1(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    return _with_objective(case, sense=flip_sense(case.model.objective.sense))


def _app_1_2_1(case: AuditTuple) -> list[Site]:
    terms = case.model.objective.terms
    if len(terms) < 2:
        return []
    return [
        ("model", "objective", "terms", str(i))
        for i, t in enumerate(terms)
        if _term_req(case, t.variable) is not None
    ]


def _tr_1_2_1(case: AuditTuple, site: Site):
    index = int(site[3])
    terms = list(case.model.objective.terms)
    removed = terms.pop(index)
    return _with_objective(case, terms=tuple(terms)), {"term": _term_doc(removed)}


def _inv_1_2_1(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    index = int(site[3])
    terms = list(case.model.objective.terms)
    terms.insert(index, _term_from_doc(undo["term"]))
    return _with_objective(case, terms=tuple(terms))


def _app_1_2_4(case: AuditTuple) -> list[Site]:
    sites = []
    for i, term in enumerate(case.model.objective.terms):
        req = _term_req(case, term.variable)
        if req is not None and req.value is not None and req.value == term.coefficient:
            sites.append(("model", "objective", "terms", str(i)))
    return sites


def _tr_1_2_4(case: AuditTuple, site: Site):
    index = int(site[3])
    term = case.model.objective.terms[index]
    return _replace_term(case, index, coefficient=-term.coefficient), {}


def _inv_1_2_4(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    index = int(site[3])
    term = case.model.objective.terms[index]
    return _replace_term(case, index, coefficient=-term.coefficient)


def _full_members(case: AuditTuple, term: Term) -> tuple[str, ...]:
    members: list[str] = []
    for name in term.indices:
        idx = case.model.index_set(name)
        if idx:
            members.extend(idx.members)
    return tuple(members)


def _app_1_3_2(case: AuditTuple) -> list[Site]:
    sites = []
    for i, term in enumerate(case.model.objective.terms):
        if term.indices and term.index_filter is None and len(_full_members(case, term)) >= 2:
            sites.append(("model", "objective", "terms", str(i)))
    return sites


def _tr_1_3_2(case: AuditTuple, site: Site):
    index = int(site[3])
    term = case.model.objective.terms[index]
    members = _full_members(case, term)
    return _replace_term(case, index, index_filter=members[:-1]), {}


def _inv_1_3_2(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    return _replace_term(case, int(site[3]), index_filter=None)


def _app_2_2_1(case: AuditTuple) -> list[Site]:
    return [
        ("model", "variable", v.name)
        for v in case.model.variables
        if v.domain in ("integer", "binary") and _domain_req(case, v.name, want=v.domain) is not None
    ]


def _tr_2_2_1(case: AuditTuple, site: Site):
    name = site[2]
    decl = case.model.variable(name)
    return _replace_variable(case, name, domain="continuous"), {"domain": decl.domain}


def _inv_2_2_1(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    return _replace_variable(case, site[2], domain=undo["domain"])


def _app_2_2_2(case: AuditTuple) -> list[Site]:
    return [
        ("model", "variable", v.name)
        for v in case.model.variables
        if v.domain == "continuous" and _domain_req(case, v.name, want="continuous") is not None
    ]


def _tr_2_2_2(case: AuditTuple, site: Site):
    return _replace_variable(case, site[2], domain="integer"), {}


def _inv_2_2_2(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    return _replace_variable(case, site[2], domain="continuous")


def _app_2_2_3(case: AuditTuple) -> list[Site]:
    sites = []
    for decl in case.model.variables:
        if decl.domain == "binary" or decl.upper is None:
            continue
        req = _bound_req(case, decl.name, "<=")
        if req is not None and req.value == decl.upper:
            sites.append(("model", "variable", decl.name))
    return sites


def _tr_2_2_3(case: AuditTuple, site: Site):
    decl = case.model.variable(site[2])
    return _replace_variable(case, site[2], upper=None), {"upper": encode_number(decl.upper)}


def _inv_2_2_3(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    return _replace_variable(case, site[2], upper=decode_number(undo["upper"], "undo.upper"))


def _app_2_2_4(case: AuditTuple) -> list[Site]:
    sites = []
    for decl in case.model.variables:
        if decl.sign != "nonneg" or decl.lower != 0:
            continue
        if _domain_req(case, decl.name, sign="nonneg") is not None:
            # Avoid a second defensible gold: skip when the schema also
            # pins the zero lower bound explicitly.
            if _bound_req(case, decl.name, ">=") is None:
                sites.append(("model", "variable", decl.name))
    return sites


def _tr_2_2_4(case: AuditTuple, site: Site):
    return _replace_variable(case, site[2], sign="free", lower=None), {"sign": "nonneg", "lower": 0}


def _inv_2_2_4(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    return _replace_variable(case, site[2], sign=undo["sign"], lower=decode_number(undo["lower"], "undo.lower"))


def _app_3_2_3(case: AuditTuple) -> list[Site]:
    return [
        ("model", "constraint", c.id)
        for c in case.model.constraints
        if _relation_req(case, c.id) is not None
    ]


def _tr_3_2_3(case: AuditTuple, site: Site):
    cid = site[2]
    constraints = list(case.model.constraints)
    index = next(i for i, c in enumerate(constraints) if c.id == cid)
    removed = constraints.pop(index)
    undo = {
        "index": index,
        "constraint": {
            "id": removed.id,
            "lhs_terms": [_term_doc(t) for t in removed.lhs_terms],
            "relation": removed.relation,
            "rhs": encode_number(removed.rhs) if not isinstance(removed.rhs, str) else removed.rhs,
            "quantified_over": list(removed.quantified_over),
        },
    }
    return _with_model(case, constraints=tuple(constraints)), undo


def _inv_3_2_3(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    doc = undo["constraint"]
    restored = ConstraintDecl(
        id=doc["id"],
        lhs_terms=tuple(_term_from_doc(t) for t in doc["lhs_terms"]),
        relation=doc["relation"],
        rhs=decode_rhs(doc["rhs"], "undo.rhs"),
        quantified_over=tuple(doc["quantified_over"]),
    )
    constraints = list(case.model.constraints)
    constraints.insert(undo["index"], restored)
    return _with_model(case, constraints=tuple(constraints))


def _app_3_4_1(case: AuditTuple) -> list[Site]:
    sites = []
    for con in case.model.constraints:
        req = _relation_req(case, con.id)
        if con.relation == "=" and req is not None and req.relation == "=":
            sites.append(("model", "constraint", con.id))
    return sites


def _tr_3_4_1(case: AuditTuple, site: Site):
    return _replace_constraint(case, site[2], relation="<="), {}


def _inv_3_4_1(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    return _replace_constraint(case, site[2], relation="=")


def _app_3_7_1(case: AuditTuple) -> list[Site]:
    sites = []
    for con in case.model.constraints:
        if con.relation not in ("<=", ">="):
            continue
        req = _relation_req(case, con.id)
        # Relations the schema does not constrain are skipped so the gold
        # label stays unambiguous.
        if req is not None and req.relation == con.relation:
            sites.append(("model", "constraint", con.id))
    return sites


def _tr_3_7_1(case: AuditTuple, site: Site):
    con = case.model.constraint(site[2])
    return _replace_constraint(case, site[2], relation=flip_relation(con.relation)), {}


def _inv_3_7_1(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    con = case.model.constraint(site[2])
    return _replace_constraint(case, site[2], relation=flip_relation(con.relation))


def _app_3_7_2(case: AuditTuple) -> list[Site]:
    sites = []
    for decl in case.model.variables:
        if decl.lower is None or decl.upper is None or decl.lower == decl.upper:
            continue
        lo_req = _bound_req(case, decl.name, ">=")
        hi_req = _bound_req(case, decl.name, "<=")
        if (
            lo_req is not None
            and hi_req is not None
            and lo_req.value == decl.lower
            and hi_req.value == decl.upper
        ):
            sites.append(("model", "variable", decl.name))
    return sites


def _tr_3_7_2(case: AuditTuple, site: Site):
    decl = case.model.variable(site[2])
    return _replace_variable(case, site[2], lower=decl.upper, upper=decl.lower), {}


def _inv_3_7_2(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    decl = case.model.variable(site[2])
    return _replace_variable(case, site[2], lower=decl.upper, upper=decl.lower)


def _app_4_1_1(case: AuditTuple) -> list[Site]:
    return [("plan", "objective")]


def _tr_4_1_1(case: AuditTuple, site: Site):
    obj = case.plan.objective
    return _with_plan(case, objective=replace(obj, api_sense=flip_sense(obj.api_sense))), {}


def _inv_4_1_1(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    obj = case.plan.objective
    return _with_plan(case, objective=replace(obj, api_sense=flip_sense(obj.api_sense)))


def _app_4_1_2(case: AuditTuple) -> list[Site]:
    model_ids = {c.id for c in case.model.constraints}
    return [
        ("plan", "materialization", m.constraint_id)
        for m in case.plan.materialized_constraints
        if m.coverage == "full" and m.bound_row is None and m.constraint_id in model_ids
    ]


def _tr_4_1_2(case: AuditTuple, site: Site):
    cid = site[2]
    mats = list(case.plan.materialized_constraints)
    index = next(i for i, m in enumerate(mats) if m.constraint_id == cid)
    mats.pop(index)
    return _with_plan(case, materialized_constraints=tuple(mats)), {"index": index}


def _inv_4_1_2(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    mats = list(case.plan.materialized_constraints)
    mats.insert(undo["index"], MaterializedConstraint(constraint_id=site[2]))
    return _with_plan(case, materialized_constraints=tuple(mats))


def _app_4_1_3(case: AuditTuple) -> list[Site]:
    sites = []
    for reg in case.plan.registered_variables:
        decl = case.model.variable(reg.name)
        if (
            decl is not None
            and reg.api_domain == decl.domain
            and reg.api_lower == decl.lower
            and reg.api_upper == decl.upper
        ):
            sites.append(("plan", "registration", reg.name))
    return sites


def _tr_4_1_3(case: AuditTuple, site: Site):
    name = site[2]
    regs = list(case.plan.registered_variables)
    index = next(i for i, r in enumerate(regs) if r.name == name)
    regs.pop(index)
    return _with_plan(case, registered_variables=tuple(regs)), {"index": index}


def _inv_4_1_3(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    decl = case.model.variable(site[2])
    regs = list(case.plan.registered_variables)
    regs.insert(undo["index"], RegisteredVariable(decl.name, decl.domain, decl.lower, decl.upper))
    return _with_plan(case, registered_variables=tuple(regs))


def _app_4_2_1(case: AuditTuple) -> list[Site]:
    sites = []
    lp_only = case.plan.solver_backend in DEFAULT_LP_ONLY_BACKENDS
    for reg in case.plan.registered_variables:
        if case.model.variable(reg.name) is None:
            continue
        if reg.api_domain in ("integer", "binary"):
            sites.append(("plan", "registration", reg.name))
        elif reg.api_domain == "continuous" and not lp_only:
            sites.append(("plan", "registration", reg.name))
    return sites


def _tr_4_2_1(case: AuditTuple, site: Site):
    name = site[2]
    regs = list(case.plan.registered_variables)
    index = next(i for i, r in enumerate(regs) if r.name == name)
    old = regs[index].api_domain
    new = "continuous" if old in ("integer", "binary") else "integer"
    regs[index] = replace(regs[index], api_domain=new)
    return _with_plan(case, registered_variables=tuple(regs)), {"api_domain": old}


def _inv_4_2_1(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    regs = list(case.plan.registered_variables)
    index = next(i for i, r in enumerate(regs) if r.name == site[2])
    regs[index] = replace(regs[index], api_domain=undo["api_domain"])
    return _with_plan(case, registered_variables=tuple(regs))


def _app_4_5_2(case: AuditTuple) -> list[Site]:
    if case.plan.readout.objective_readout in ("solved_value", "negated_solved_value"):
        return [("plan", "readout")]
    return []


def _toggle_readout(value: str) -> str:
    return "negated_solved_value" if value == "solved_value" else "solved_value"


def _tr_4_5_2(case: AuditTuple, site: Site):
    readout = case.plan.readout
    return (
        _with_plan(case, readout=replace(readout, objective_readout=_toggle_readout(readout.objective_readout))),
        {},
    )


def _inv_4_5_2(case: AuditTuple, site: Site, undo: dict) -> AuditTuple:
    readout = case.plan.readout
    return _with_plan(case, readout=replace(readout, objective_readout=_toggle_readout(readout.objective_readout)))


_RECIPE_DEFS = [
    ("1.1.1", "flip-objective-sense", "flip the objective sense back"),
    ("1.2.1", "drop-objective-term", "reinsert the dropped objective term"),
    ("1.2.4", "negate-objective-coefficient", "negate the coefficient back"),
    ("1.3.2", "truncate-objective-index", "remove the index filter so the sum covers the full set"),
    ("2.2.1", "relax-discrete-variable", "restore the declared discrete domain"),
    ("2.2.2", "discretize-continuous-variable", "restore the continuous domain"),
    ("2.2.3", "drop-upper-bound", "restore the finite upper bound"),
    ("2.2.4", "free-nonneg-variable", "restore the nonnegative sign and zero lower bound"),
    ("3.2.3", "delete-constraint", "reinsert the deleted constraint"),
    ("3.4.1", "relax-equality", "restore the equality relation"),
    ("3.7.1", "flip-inequality", "flip the relation back"),
    ("3.7.2", "swap-variable-bounds", "swap the bounds back"),
    ("4.1.1", "flip-plan-sense", "flip the plan api sense back"),
    ("4.1.2", "drop-materialization", "reinsert the materialization entry"),
    ("4.1.3", "drop-registration", "re-register the variable from its declaration"),
    ("4.2.1", "flip-api-domain", "restore the registered api domain"),
    ("4.5.2", "flip-readout-sign", "restore the objective readout convention"),
]

_APPLICABLE = {
    "1.1.1": _app_1_1_1, "1.2.1": _app_1_2_1, "1.2.4": _app_1_2_4, "1.3.2": _app_1_3_2,
    "2.2.1": _app_2_2_1, "2.2.2": _app_2_2_2, "2.2.3": _app_2_2_3, "2.2.4": _app_2_2_4,
    "3.2.3": _app_3_2_3, "3.4.1": _app_3_4_1, "3.7.1": _app_3_7_1, "3.7.2": _app_3_7_2,
    "4.1.1": _app_4_1_1, "4.1.2": _app_4_1_2, "4.1.3": _app_4_1_3, "4.2.1": _app_4_2_1,
    "4.5.2": _app_4_5_2,
}
_TRANSFORM = {
    "1.1.1": _tr_1_1_1, "1.2.1": _tr_1_2_1, "1.2.4": _tr_1_2_4, "1.3.2": _tr_1_3_2,
    "2.2.1": _tr_2_2_1, "2.2.2": _tr_2_2_2, "2.2.3": _tr_2_2_3, "2.2.4": _tr_2_2_4,
    "3.2.3": _tr_3_2_3, "3.4.1": _tr_3_4_1, "3.7.1": _tr_3_7_1, "3.7.2": _tr_3_7_2,
    "4.1.1": _tr_4_1_1, "4.1.2": _tr_4_1_2, "4.1.3": _tr_4_1_3, "4.2.1": _tr_4_2_1,
    "4.5.2": _tr_4_5_2,
}
_INVERT = {
    "1.1.1": _inv_1_1_1, "1.2.1": _inv_1_2_1, "1.2.4": _inv_1_2_4, "1.3.2": _inv_1_3_2,
    "2.2.1": _inv_2_2_1, "2.2.2": _inv_2_2_2, "2.2.3": _inv_2_2_3, "2.2.4": _inv_2_2_4,
    "3.2.3": _inv_3_2_3, "3.4.1": _inv_3_4_1, "3.7.1": _inv_3_7_1, "3.7.2": _inv_3_7_2,
    "4.1.1": _inv_4_1_1, "4.1.2": _inv_4_1_2, "4.1.3": _inv_4_1_3, "4.2.1": _inv_4_2_1,
    "4.5.2": _inv_4_5_2,
}

RECIPES: tuple[InjectionRecipe, ...] = tuple(InjectionRecipe(code, name, repair) for code, name, repair in _RECIPE_DEFS)
RECIPES_BY_CODE = {r.code: r for r in RECIPES}


def applicable(recipe: InjectionRecipe, case: AuditTuple) -> list[Site]:
    return recipe.applicable(case)


def _site_slug(site: Site) -> str:
    return "-".join(part.replace(".", "_") for part in site)


def inject(recipe: InjectionRecipe, case: AuditTuple, rng_seed: int, registry: TaxonomyRegistry) -> InjectedCase:
    """Corrupt one seeded-random applicable site; gold label and reversal
    data ride along in provenance."""
    sites = recipe.applicable(case)
    if not sites:
        raise NotApplicableError(f"recipe {recipe.code} has no applicable site on case {case.case_id!r}")
    rng = random.Random(f"{rng_seed}:{recipe.code}:{case.case_id}")
    site = sites[rng.randrange(len(sites))]
    return inject_at(recipe, case, site, rng_seed, registry)


def inject_at(
    recipe: InjectionRecipe,
    case: AuditTuple,
    site: Site,
    rng_seed: int,
    registry: TaxonomyRegistry,
) -> InjectedCase:
    if site not in recipe.applicable(case):
        raise NotApplicableError(f"site {site} is not applicable for recipe {recipe.code} on {case.case_id!r}")
    corrupted, undo = recipe.transform(case, site)
    corrupted = replace(
        corrupted,
        case_id=f"{case.case_id}__{recipe.code.replace('.', '-')}__{_site_slug(site)}",
    )
    if corrupted.problem.schema != case.problem.schema:
        raise SchemaError(f"recipe {recipe.code} touched the gold schema; recipes must never edit it")
    return InjectedCase(
        case=corrupted,
        gold=registry.by_code(recipe.code),
        provenance={
            "seed_case_id": case.case_id,
            "recipe": recipe.code,
            "site": list(site),
            "rng_seed": rng_seed,
            "undo": undo,
        },
    )


def invert_injection(injected: InjectedCase) -> AuditTuple:
    """Apply the recipe's documented inverse at the recorded site; the
    result must match the seed case byte-for-byte."""
    prov = injected.provenance
    recipe = RECIPES_BY_CODE[prov["recipe"]]
    site = tuple(prov["site"])
    restored = recipe.invert(injected.case, site, prov.get("undo", {}))
    return replace(restored, case_id=prov["seed_case_id"])


def build_benchmark(
    seeds: list[AuditTuple],
    recipes: list[InjectionRecipe],
    per_type_target: int,
    rng_seed: int,
    registry: TaxonomyRegistry,
    stratum_key: str = "seed_family",
) -> tuple[list[InjectedCase], list[CoverageRow]]:
    """Sample up to ``per_type_target`` (seed, site) pairs per recipe,
    stratified by the seeds' family metadata tag, with per-recipe derived
    sub-seeds so output never depends on recipe scheduling."""
    if per_type_target < 1:
        raise ValueError("per_type_target must be at least 1")

    cases: list[InjectedCase] = []
    coverage: list[CoverageRow] = []
    for recipe in recipes:
        strata: dict[str, list[tuple[AuditTuple, Site]]] = {}
        for seed in seeds:
            stratum = str(seed.meta(stratum_key, "default"))
            for site in recipe.applicable(seed):
                strata.setdefault(stratum, []).append((seed, site))
        total_sites = sum(len(v) for v in strata.values())

        rng = random.Random(f"{rng_seed}:{recipe.code}")
        for pairs in strata.values():
            rng.shuffle(pairs)
        picked: list[tuple[AuditTuple, Site]] = []
        stratum_names = sorted(strata)
        cursor = 0
        while len(picked) < per_type_target and any(strata[s] for s in stratum_names):
            name = stratum_names[cursor % len(stratum_names)]
            cursor += 1
            if strata[name]:
                picked.append(strata[name].pop())
        for seed, site in picked:
            cases.append(inject_at(recipe, seed, site, rng_seed, registry))

        status = "shortage" if not picked else ("full" if len(picked) >= per_type_target else "partial")
        coverage.append(CoverageRow(recipe.code, recipe.name, total_sites, len(picked), status))

    cases.sort(key=lambda c: c.case.case_id)
    return cases, coverage
