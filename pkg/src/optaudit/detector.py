"""The routed multi-specialist detector core.

One audit is a bounded state-machine run: contract checks and triage
build the shared state and pick the initial branches, the selected
specialists emit candidate findings and dependency notes, cross-review
iterations follow notes (each at most once per (from, to) pair) until
the queue drains or the iteration budget is hit, and a single optional
rescue pass re-opens cue- or contract-implicated branches when the pool
came back empty despite hard evidence.

Specialists run in one of two modes. With a remote/replay backend they
are prompt-driven and parsed through the gateway with a family filter.
In heuristic mode they are deterministic differs over the gold schema,
the symbolic model, and the contract report; this mode is the offline
test surface and never errors.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .artifact import (
    AuditTuple,
    DependencyGraph,
    ElementRef,
    SemanticSchema,
    VariableDecl,
    build_dependency_graph,
)
from .config import AppConfig
from .contracts import ContractReport, check_plan_fidelity, check_raw_code
from .errors import BackendError, ResponseParseError
from .gateway import Backend, ParsedFinding, UsageRecord, parse_findings
from .prompts import build_conductor_request, build_single_agent_request, build_specialist_request
from .taxonomy import Family, LabelPath, TaxonomyRegistry

VERDICT_HALLUCINATED = "hallucinated"


@dataclass(frozen=True)
class CandidateFinding:
    """One specialist claim about one element, fully labeled."""

    finding_id: str
    element: ElementRef
    label: LabelPath
    verdict: str
    support: float
    evidence: tuple[str, ...]
    canonical_issue: str = ""
    is_root_cause: bool = False
    duplicate_of: str | None = None
    severity: str = "medium"
    repair: str = ""

    def as_dict(self) -> dict:
        return {
            "finding_id": self.finding_id,
            "element": str(self.element),
            **self.label.as_dict(),
            "verdict": self.verdict,
            "support": self.support,
            "evidence": list(self.evidence),
            "canonical_issue": self.canonical_issue,
            "is_root_cause": self.is_root_cause,
            "duplicate_of": self.duplicate_of,
            "severity": self.severity,
            "repair": self.repair,
        }


@dataclass(frozen=True)
class DependencyNote:
    from_family: Family
    to_family: Family
    description: str
    elements: tuple[str, ...] = ()


@dataclass(frozen=True)
class Cue:
    cue_id: str
    anchor: str
    branches: tuple[Family, ...]


@dataclass(frozen=True)
class RoutingDecision:
    active: tuple[Family, ...]
    cues: tuple[Cue, ...]
    rescue_pass: bool = False


@dataclass
class SharedState:
    """Per-case shared state: append-only blackboard plus a work queue."""

    schema: SemanticSchema
    deps: DependencyGraph
    contract: ContractReport
    blackboard: list[tuple[str, object]] = field(default_factory=list)
    queue: list[DependencyNote] = field(default_factory=list)
    iteration: int = 0
    converged: bool = False

    def note(self, kind: str, payload: object) -> None:
        self.blackboard.append((kind, payload))


@dataclass
class AuditRun:
    """Everything a single detector pass produced, pre-consolidation."""

    pool: list[CandidateFinding]
    routing: RoutingDecision
    schema: SemanticSchema
    deps: DependencyGraph
    contract: ContractReport
    usage: UsageRecord
    specialist_invocations: int = 0
    iterations: int = 0
    unresolved_notes: list[DependencyNote] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


# ---------------------------------------------------------------------------
# triage

_MIN_WORDS = ("minimize", "minimizes", "minimizing", "lowest", "least", "smallest", "cheapest")
_MAX_WORDS = ("maximize", "maximizes", "maximizing", "highest", "most profitable", "largest", "greatest")

# Fixed cue order doubles as the truncation priority when more than three
# branches are implicated at triage time.
_CUE_ORDER = (
    "SENSE_MISMATCH",
    "CONTRACT_FAIL",
    "DOMAIN_TENSION",
    "TERM_GAP",
    "INDEX_SUBSET",
    "POOLED_TOTAL",
    "RELATION_GAP",
    "SENSE_TEXT",
)


def _text_sense(text: str) -> str | None:
    lowered = text.lower()
    has_min = any(w in lowered for w in _MIN_WORDS)
    has_max = any(w in lowered for w in _MAX_WORDS)
    if has_min == has_max:
        return None
    return "minimize" if has_min else "maximize"


def _bound_requirements(schema: SemanticSchema, target: str) -> tuple[Fraction | None, Fraction | None]:
    lower = upper = None
    for req in schema.requirements("bound", target):
        if req.relation == "<=" and req.value is not None:
            upper = req.value
        elif req.relation == ">=" and req.value is not None:
            lower = req.value
    return lower, upper


def _is_bound_swap(decl: VariableDecl, schema: SemanticSchema) -> bool:
    req_lower, req_upper = _bound_requirements(schema, decl.name)
    if req_lower is None or req_upper is None or req_lower == req_upper:
        return False
    return decl.lower == req_upper and decl.upper == req_lower


def evaluate_cues(case: AuditTuple, schema: SemanticSchema | None, contract: ContractReport) -> list[Cue]:
    """Evaluate the fixed cue inventory in order; schema-free cues still
    fire when no gold or extracted schema is available."""
    cues: list[Cue] = []
    schema = schema if schema is not None else SemanticSchema()
    model, plan = case.model, case.plan

    if plan.effective_sense() != model.objective.sense:
        cues.append(
            Cue(
                "SENSE_MISMATCH",
                f"model sense '{model.objective.sense}' vs plan effective sense '{plan.effective_sense()}'",
                (Family.IMPLEMENTATION, Family.OBJECTIVE),
            )
        )

    raw_fail = [c for c in contract.fails() if c.check_id in ("ENTRY", "PLACEHOLDER", "SENSE_TOKEN", "API_TOKEN")]
    if raw_fail:
        cues.append(Cue("CONTRACT_FAIL", raw_fail[0].evidence[0], (Family.IMPLEMENTATION,)))

    for decl in model.variables:
        tension = None
        for req in schema.requirements("domain", decl.name):
            if req.domain is not None and req.domain != decl.domain:
                tension = f"'{decl.name}' should be {req.domain} but is declared {decl.domain}"
            elif req.sign is not None and req.sign != decl.sign:
                tension = f"'{decl.name}' should be {req.sign} but is declared {decl.sign}"
        if tension is None and not _is_bound_swap(decl, schema):
            req_lower, req_upper = _bound_requirements(schema, decl.name)
            if (req_lower is not None and decl.lower != req_lower) or (
                req_upper is not None and decl.upper != req_upper
            ):
                tension = f"'{decl.name}' declared bounds disagree with the stated limits"
        if tension:
            cues.append(Cue("DOMAIN_TENSION", tension, (Family.VARIABLE,)))
            break

    for req in schema.requirements("objective_term"):
        matching = [t for t in model.objective.terms if t.variable == req.target]
        if not matching or (req.value is not None and all(t.coefficient != req.value for t in matching)):
            cues.append(Cue("TERM_GAP", f"stated objective term on '{req.target}' is missing or altered", (Family.OBJECTIVE,)))
            break

    for term in model.objective.terms:
        if term.index_filter is not None:
            full: set[str] = set()
            for name in term.indices:
                idx = model.index_set(name)
                if idx:
                    full |= set(idx.members)
            if set(term.index_filter) < full:
                cues.append(
                    Cue("INDEX_SUBSET", f"objective term on '{term.variable}' sums over a proper subset", (Family.OBJECTIVE,))
                )
                break

    def _relation_gap(req) -> str | None:
        con = model.constraint(req.target)
        if con is None:
            return f"stated rule '{req.target}' has no constraint in the model"
        if req.relation is not None and con.relation != req.relation:
            return f"constraint '{req.target}' uses '{con.relation}' where the statement requires '{req.relation}'"
        return None

    pooled_anchor = next(
        (gap for req in schema.requirements("relation") if req.pooled and (gap := _relation_gap(req))), None
    )
    if pooled_anchor:
        cues.append(Cue("POOLED_TOTAL", pooled_anchor, (Family.CONSTRAINT,)))

    relation_anchor = next(
        (gap for req in schema.requirements("relation") if (gap := _relation_gap(req))), None
    )
    if relation_anchor is None:
        swap = next((d for d in model.variables if _is_bound_swap(d, schema)), None)
        if swap is not None:
            relation_anchor = f"declared bounds of '{swap.name}' are crossed relative to the stated limits"
    if relation_anchor:
        cues.append(Cue("RELATION_GAP", relation_anchor, (Family.CONSTRAINT,)))

    stated = _text_sense(case.problem.text)
    if stated is not None and stated != model.objective.sense:
        cues.append(
            Cue("SENSE_TEXT", f"problem text reads as '{stated}' but the model declares '{model.objective.sense}'", (Family.OBJECTIVE,))
        )

    cues.sort(key=lambda c: _CUE_ORDER.index(c.cue_id))
    return cues


def _branches_from_cues(cues: list[Cue], limit: int = 3) -> tuple[Family, ...]:
    active: list[Family] = []
    for cue in cues:
        candidate = [f for f in cue.branches if f not in active]
        if len(active) + len(candidate) <= limit:
            active.extend(candidate)
    return tuple(active)


def triage(
    case: AuditTuple,
    contract: ContractReport,
    backend: Backend,
    registry: TaxonomyRegistry,
    config: AppConfig,
    usage: UsageRecord | None = None,
) -> tuple[SemanticSchema, RoutingDecision]:
    """Stabilize the schema, evaluate cues, and pick the initial branches.

    The gold schema wins when present; remote/replay backends extract one
    from the problem text; the heuristic backend falls back to an empty
    schema so only schema-free cues can route.
    """
    schema = case.problem.schema
    diagnostics: list[str] = []
    if schema is None:
        if backend.kind in ("remote", "replay"):
            text, call_usage = backend.complete(build_conductor_request(case, config))
            if usage is not None:
                usage.add(call_usage)
            schema = _parse_schema_response(text, diagnostics)
        else:
            schema = SemanticSchema()
    cues = evaluate_cues(case, schema, contract)
    active = _branches_from_cues(cues) or (Family.CONSTRAINT,)
    return schema, RoutingDecision(active=active, cues=tuple(cues))


def _parse_schema_response(text: str, diagnostics: list[str]) -> SemanticSchema:
    import json

    from .artifact import _parse_schema  # shared with case parsing

    try:
        payload = json.loads(text)
        return _parse_schema(payload.get("schema", payload))
    except Exception as exc:  # noqa: BLE001 - degrade to empty schema, keep auditing
        diagnostics.append(f"schema extraction failed, continuing with empty schema: {exc}")
        return SemanticSchema()


# ---------------------------------------------------------------------------
# heuristic specialists

def _mk(
    counter: list[int],
    element: ElementRef,
    label: LabelPath,
    canonical_issue: str,
    evidence: tuple[str, ...],
    repair: str,
) -> CandidateFinding:
    counter[0] += 1
    return CandidateFinding(
        finding_id=f"f{counter[0]}",
        element=element,
        label=label,
        verdict=VERDICT_HALLUCINATED,
        support=1.0,
        evidence=evidence,
        canonical_issue=canonical_issue,
        is_root_cause=True,
        severity="high",
        repair=repair,
    )


def _heuristic_objective(case: AuditTuple, schema: SemanticSchema, registry: TaxonomyRegistry, counter: list[int]):
    findings: list[CandidateFinding] = []
    notes: list[DependencyNote] = []
    model = case.model
    obj_ref = ElementRef("model", "objective", "objective")

    for req in schema.requirements("objective_sense"):
        if req.sense is not None and req.sense != model.objective.sense:
            findings.append(
                _mk(
                    counter,
                    obj_ref,
                    registry.by_code("1.1.1"),
                    "objective sense reversed",
                    (f"statement requires '{req.sense}'", f"model objective is '{model.objective.sense}'"),
                    f"change the objective sense to {req.sense}",
                )
            )

    for req in schema.requirements("objective_term"):
        matching = [t for t in model.objective.terms if t.variable == req.target]
        if not matching:
            findings.append(
                _mk(
                    counter,
                    obj_ref,
                    registry.by_code("1.2.1"),
                    f"objective term on {req.target} missing",
                    (f"statement prices '{req.target}' in the objective", "no objective term references it"),
                    f"add the {req.target} term back to the objective",
                )
            )
        elif req.value is not None and any(t.coefficient == -req.value for t in matching):
            findings.append(
                _mk(
                    counter,
                    obj_ref,
                    registry.by_code("1.2.4"),
                    f"objective term on {req.target} sign-flipped",
                    (
                        f"statement gives coefficient {req.value} for '{req.target}'",
                        f"model carries {-req.value}",
                    ),
                    f"restore the sign of the {req.target} term",
                )
            )

    for term in model.objective.terms:
        if term.index_filter is None:
            continue
        full: set[str] = set()
        for name in term.indices:
            idx = model.index_set(name)
            if idx:
                full |= set(idx.members)
        if set(term.index_filter) < full:
            dropped = sorted(full - set(term.index_filter))
            findings.append(
                _mk(
                    counter,
                    obj_ref,
                    registry.by_code("1.3.2"),
                    f"objective sum over {term.variable} truncated",
                    (f"term on '{term.variable}' skips members {dropped}",),
                    f"sum the {term.variable} term over the full index set",
                )
            )
    return findings, notes


def _heuristic_variable(case: AuditTuple, schema: SemanticSchema, registry: TaxonomyRegistry, counter: list[int]):
    findings: list[CandidateFinding] = []
    notes: list[DependencyNote] = []
    for decl in case.model.variables:
        ref = ElementRef("model", "variable", decl.name)
        domain_reqs = list(schema.requirements("domain", decl.name))

        type_req = next((r for r in domain_reqs if r.domain is not None and r.domain != decl.domain), None)
        if type_req is not None:
            if type_req.domain in ("integer", "binary") and decl.domain == "continuous":
                code, issue = "2.2.1", f"{decl.name} relaxed to continuous"
            elif type_req.domain == "continuous" and decl.domain in ("integer", "binary"):
                code, issue = "2.2.2", f"{decl.name} forced discrete"
            else:
                continue  # integer-vs-binary tension has no clean type here
            findings.append(
                _mk(
                    counter,
                    ref,
                    registry.by_code(code),
                    issue,
                    (f"statement requires '{decl.name}' to be {type_req.domain}", f"declared {decl.domain}"),
                    f"declare {decl.name} as {type_req.domain}",
                )
            )
            continue

        sign_req = next((r for r in domain_reqs if r.sign is not None and r.sign != decl.sign), None)
        if sign_req is not None:
            findings.append(
                _mk(
                    counter,
                    ref,
                    registry.by_code("2.2.4"),
                    f"{decl.name} sign domain wrong",
                    (f"statement restricts '{decl.name}' to {sign_req.sign}", f"declared {decl.sign}"),
                    f"restore the {sign_req.sign} restriction on {decl.name}",
                )
            )
            continue

        if _is_bound_swap(decl, schema):
            # Crossed bounds are boundary structure; the constraint branch
            # owns the label, so hand it over instead of claiming it.
            notes.append(
                DependencyNote(
                    from_family=Family.VARIABLE,
                    to_family=Family.CONSTRAINT,
                    description=f"declared bounds of '{decl.name}' appear crossed relative to the stated limits",
                    elements=(str(ref),),
                )
            )
            continue

        req_lower, req_upper = _bound_requirements(schema, decl.name)
        bad_lower = req_lower is not None and decl.lower != req_lower
        bad_upper = req_upper is not None and decl.upper != req_upper
        if bad_lower or bad_upper:
            side = "upper" if bad_upper else "lower"
            stated = req_upper if bad_upper else req_lower
            actual = decl.upper if bad_upper else decl.lower
            findings.append(
                _mk(
                    counter,
                    ref,
                    registry.by_code("2.2.3"),
                    f"{decl.name} {side} bound wrong",
                    (f"statement fixes the {side} bound of '{decl.name}' at {stated}", f"declared {actual}"),
                    f"set the {side} bound of {decl.name} to {stated}",
                )
            )
    return findings, notes


def _heuristic_constraint(case: AuditTuple, schema: SemanticSchema, registry: TaxonomyRegistry, counter: list[int]):
    findings: list[CandidateFinding] = []
    notes: list[DependencyNote] = []
    model = case.model

    for req in schema.requirements("relation"):
        con = model.constraint(req.target)
        if con is None:
            findings.append(
                _mk(
                    counter,
                    ElementRef("model", "expected_missing", req.target),
                    registry.by_code("3.2.3"),
                    f"required constraint {req.target} missing",
                    (f"statement requires rule '{req.target}'", "the model has no such constraint"),
                    f"add the {req.target} constraint",
                )
            )
            continue
        ref = ElementRef("model", "constraint", con.id)
        if req.relation is not None and con.relation != req.relation:
            if req.relation == "=" and con.relation in ("<=", ">="):
                findings.append(
                    _mk(
                        counter,
                        ref,
                        registry.by_code("3.4.1"),
                        f"{con.id} equality relaxed",
                        (f"statement requires '{req.target}' to hold exactly", f"model uses '{con.relation}'"),
                        f"restore {con.id} to an equality",
                    )
                )
            elif {req.relation, con.relation} == {"<=", ">="}:
                findings.append(
                    _mk(
                        counter,
                        ref,
                        registry.by_code("3.7.1"),
                        f"{con.id} inequality direction flipped",
                        (f"statement bounds '{req.target}' with '{req.relation}'", f"model uses '{con.relation}'"),
                        f"flip the relation of {con.id} back to {req.relation}",
                    )
                )

    for decl in model.variables:
        if _is_bound_swap(decl, schema):
            req_lower, req_upper = _bound_requirements(schema, decl.name)
            findings.append(
                _mk(
                    counter,
                    ElementRef("model", "variable", decl.name),
                    registry.by_code("3.7.2"),
                    f"{decl.name} bounds swapped",
                    (
                        f"statement puts '{decl.name}' between {req_lower} and {req_upper}",
                        f"declared interval is [{decl.lower}, {decl.upper}]",
                    ),
                    f"swap the bounds of {decl.name} back",
                )
            )
    return findings, notes


def _heuristic_implementation(case: AuditTuple, contract: ContractReport, counter: list[int]):
    findings: list[CandidateFinding] = []
    for check in contract.fails():
        if check.suggested_label is None:
            continue  # raw-code token checks route the branch; the plan checks carry labels
        target = check.check_id.split(":", 1)[1] if ":" in check.check_id else "objective"
        findings.append(
            _mk(
                counter,
                ElementRef("plan", "code_object", target),
                check.suggested_label,
                f"{check.check_id.lower()} contract check failed",
                check.evidence,
                f"align the plan with the symbolic model at {target}",
            )
        )
    return findings, []


def run_specialist(
    family: Family,
    case: AuditTuple,
    state: SharedState,
    backend: Backend,
    registry: TaxonomyRegistry,
    config: AppConfig,
    counter: list[int],
    usage: UsageRecord,
    diagnostics: list[str],
) -> tuple[list[CandidateFinding], list[DependencyNote]]:
    """Run one branch. Heuristic mode is a deterministic differ; LLM mode
    assembles the family prompt and parses with a family filter."""
    if backend.kind == "heuristic_stub":
        if family is Family.OBJECTIVE:
            return _heuristic_objective(case, state.schema, registry, counter)
        if family is Family.VARIABLE:
            return _heuristic_variable(case, state.schema, registry, counter)
        if family is Family.CONSTRAINT:
            return _heuristic_constraint(case, state.schema, registry, counter)
        return _heuristic_implementation(case, state.contract, counter)

    request = build_specialist_request(family, case, state.schema, registry, config, state.contract)
    text, call_usage = backend.complete(request)
    call_usage.specialist_call_count = 1
    usage.add(call_usage)
    try:
        outcome = parse_findings(text, registry, family_filter=family)
    except ResponseParseError as exc:
        diagnostics.append(f"{family.value} specialist returned unstructured output: {exc}")
        return [], []
    diagnostics.extend(outcome.diagnostics)
    findings = [_adopt(counter, parsed) for parsed in outcome.findings[: config.detector.max_findings]]
    notes = []
    for note in outcome.dependency_notes:
        try:
            to_family = Family(str(note.get("to_family", "")).lower())
        except ValueError:
            diagnostics.append(f"{family.value} specialist emitted a note to unknown family {note.get('to_family')!r}")
            continue
        if to_family is family:
            continue
        notes.append(
            DependencyNote(
                from_family=family,
                to_family=to_family,
                description=str(note.get("description", "")),
                elements=tuple(str(e) for e in note.get("elements", ())),
            )
        )
    return findings, notes


def _adopt(counter: list[int], parsed: ParsedFinding) -> CandidateFinding:
    counter[0] += 1
    return CandidateFinding(
        finding_id=f"f{counter[0]}",
        element=parsed.element,
        label=parsed.label,
        verdict=parsed.verdict,
        support=parsed.support,
        evidence=parsed.evidence,
        canonical_issue=parsed.canonical_issue,
        is_root_cause=parsed.is_root_cause,
        duplicate_of=parsed.duplicate_of,
        severity=parsed.severity,
        repair=parsed.repair,
    )


# ---------------------------------------------------------------------------
# the audit loop

def compute_contract(case: AuditTuple, config: AppConfig, registry: TaxonomyRegistry) -> ContractReport:
    """Both contract evidence sources for a case, honoring the configured
    check subset."""
    report = check_plan_fidelity(case.model, case.plan, registry).merged(
        check_raw_code(
            case.plan.raw_code.text if case.plan.raw_code else None,
            case.plan.raw_code.language if case.plan.raw_code else "python",
            entry_point_token=config.contract.entry_point_token,
            api_allowlist=config.contract.api_allowlist,
        )
    )
    return report.restricted(config.contract.enabled_checks)


def run_audit_loop(
    case: AuditTuple,
    backend: Backend,
    registry: TaxonomyRegistry,
    config: AppConfig,
) -> AuditRun:
    """Full routed inference for one case: triage, initial branches,
    note-driven cross-review under the iteration budget, optional rescue."""
    if config.detector.budget < 1:
        raise ValueError("detector.budget must be at least 1")

    usage = UsageRecord()
    diagnostics: list[str] = []
    contract = compute_contract(case, config, registry)
    schema, routing = triage(case, contract, backend, registry, config, usage)
    if config.detector.all_experts:
        routing = replace(routing, active=tuple(Family))

    state = SharedState(schema=schema, deps=build_dependency_graph(case), contract=contract)
    counter = [0]
    pool: list[CandidateFinding] = []
    invocations = 0
    ran: set[Family] = set()
    reviewed: set[tuple[Family, Family]] = set()

    def _run(family: Family) -> None:
        nonlocal invocations
        invocations += 1
        findings, notes = run_specialist(family, case, state, backend, registry, config, counter, usage, diagnostics)
        for f in findings:
            state.note("finding", f)
        pool.extend(findings)
        for n in notes:
            state.note("dependency_note", n)
        state.queue.extend(notes)
        ran.add(family)

    state.iteration = 1
    for family in routing.active:
        _run(family)

    while state.queue and state.iteration < config.detector.budget:
        state.iteration += 1
        batch, state.queue = state.queue, []
        for note in batch:
            key = (note.from_family, note.to_family)
            if key in reviewed:
                continue
            reviewed.add(key)
            _run(note.to_family)

    if state.queue:
        diagnostics.append(f"budget reached with {len(state.queue)} unresolved dependency notes")

    if (
        config.detector.rescue
        and not pool
        and not config.detector.all_experts
        and (routing.cues or contract.fails())
    ):
        implicated = {f for cue in routing.cues for f in cue.branches}
        if contract.fails():
            implicated.add(Family.IMPLEMENTATION)
        rescue_targets = [f for f in Family if f in implicated and f not in ran]
        if rescue_targets:
            routing = replace(routing, rescue_pass=True)
            state.note("abstention_note", "initial pass empty despite evidence; rescue pass over implicated branches")
            for family in rescue_targets:
                _run(family)

    state.converged = not state.queue
    return AuditRun(
        pool=pool,
        routing=routing,
        schema=schema,
        deps=state.deps,
        contract=contract,
        usage=usage,
        specialist_invocations=invocations,
        iterations=state.iteration,
        unresolved_notes=list(state.queue),
        diagnostics=diagnostics,
    )


def audit_single_agent(
    case: AuditTuple,
    backend: Backend,
    registry: TaxonomyRegistry,
    config: AppConfig,
) -> AuditRun:
    """Monolithic baseline: the whole audit in one structured call, no
    routing and no family filter; parse failures abstain rather than crash."""
    if backend.kind not in ("remote", "replay"):
        raise BackendError("the single-pass detector needs a remote or replay backend")

    usage = UsageRecord()
    diagnostics: list[str] = []
    contract = compute_contract(case, config, registry)
    text, call_usage = backend.complete(build_single_agent_request(case, registry, config))
    usage.add(call_usage)
    counter = [0]
    pool: list[CandidateFinding] = []
    try:
        outcome = parse_findings(text, registry, family_filter=None)
        diagnostics.extend(outcome.diagnostics)
        pool = [_adopt(counter, parsed) for parsed in outcome.findings]
    except ResponseParseError as exc:
        diagnostics.append(f"single-pass response was unstructured; abstaining: {exc}")

    schema = case.problem.schema or SemanticSchema()
    return AuditRun(
        pool=pool,
        routing=RoutingDecision(active=tuple(Family), cues=()),
        schema=schema,
        deps=build_dependency_graph(case),
        contract=contract,
        usage=usage,
        specialist_invocations=1,
        iterations=1,
        diagnostics=diagnostics,
    )
