"""Deterministic code-contract checks for the implementation branch.

Two evidence sources: plan-vs-model fidelity checks over the structured
materialization plan, and shallow token-level checks over raw solver
code. Both are report-only; the detector decides what becomes a finding.

Equivalence suppression: a maximize-via-sign-flip wrapper (negated
coefficients + declared readout correction) and a bound encoded as an
explicit solver row are both treated as faithful styles, never failures.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field

from .artifact import MaterializationPlan, SymbolicModel
from .taxonomy import LabelPath, TaxonomyRegistry

STATUS_PASS = "pass"
STATUS_FAIL = "fail"
STATUS_INAPPLICABLE = "inapplicable"

DEFAULT_ENTRY_POINT = "solve_model"
# Generic modeling-API surface accepted without complaint; anything else
# invoked on a model/solver receiver is reported as an unknown API token.
DEFAULT_API_ALLOWLIST = (
    "add_constraint",
    "add_constraints",
    "add_var",
    "add_variable",
    "add_variables",
    "addConstr",
    "addConstrs",
    "addVar",
    "addVars",
    "getObjective",
    "getVars",
    "linprog",
    "lpSum",
    "maximize",
    "milp",
    "minimize",
    "objective",
    "optimize",
    "setObjective",
    "set_objective",
    "solve",
    "status",
    "value",
)
DEFAULT_LP_ONLY_BACKENDS = ("linprog", "lp_only", "glop")

_PLACEHOLDER_RE = re.compile(r"\bTODO\b|\bFIXME\b|^\s*\.\.\.\s*$", re.MULTILINE)
_API_CALL_RE = re.compile(r"\b(?:model|solver|prob|m)\.(\w+)\s*\(")
_MIN_TOKENS = ("minimize", "LpMinimize", "GRB.MINIMIZE")
_MAX_TOKENS = ("maximize", "LpMaximize", "GRB.MAXIMIZE")


@dataclass(frozen=True)
class ContractCheck:
    check_id: str
    status: str
    evidence: tuple[str, ...] = ()
    suggested_label: LabelPath | None = None


@dataclass
class ContractReport:
    checks: list[ContractCheck] = field(default_factory=list)

    def add(self, check_id: str, status: str, evidence: tuple[str, ...] = (), label: LabelPath | None = None) -> None:
        if status == STATUS_FAIL and not evidence:
            raise ValueError(f"fail check {check_id} requires at least one evidence anchor")
        self.checks.append(ContractCheck(check_id, status, evidence, label))

    def fails(self) -> list[ContractCheck]:
        return [c for c in self.checks if c.status == STATUS_FAIL]

    @property
    def is_clean(self) -> bool:
        return not self.fails()

    def merged(self, other: "ContractReport") -> "ContractReport":
        return ContractReport(checks=self.checks + other.checks)

    def restricted(self, enabled_checks: tuple[str, ...]) -> "ContractReport":
        """Keep only the named check families; an empty tuple means all.
        Check ids compare on their base name (before any ':target')."""
        if not enabled_checks:
            return self
        kept = [c for c in self.checks if c.check_id.split(":", 1)[0] in enabled_checks]
        return ContractReport(checks=kept)


def check_plan_fidelity(
    model: SymbolicModel,
    plan: MaterializationPlan,
    registry: TaxonomyRegistry,
) -> ContractReport:
    """Compare what the plan registers, materializes, and reports against
    the symbolic model."""
    report = ContractReport()
    obj = plan.objective

    # SENSE: effective sense folds one negation out of the api sense.
    effective = plan.effective_sense()
    if effective != model.objective.sense:
        report.add(
            "SENSE",
            STATUS_FAIL,
            (
                f"model objective sense is '{model.objective.sense}'",
                f"plan api_sense='{obj.api_sense}' with coefficient_source='{obj.coefficient_source}' "
                f"realizes '{effective}'",
            ),
            registry.by_code("4.1.1"),
        )
    else:
        report.add("SENSE", STATUS_PASS)

    # MATERIALIZATION / coverage, one check per model constraint.
    for con in model.constraints:
        mat = plan.materialization(con.id)
        if mat is None:
            report.add(
                f"MATERIALIZATION:{con.id}",
                STATUS_FAIL,
                (f"constraint '{con.id}' exists in the model but has no materialization entry",),
                registry.by_code("4.1.2"),
            )
        elif mat.coverage == "partial":
            report.add(
                f"MATERIALIZATION:{con.id}",
                STATUS_FAIL,
                (
                    f"constraint '{con.id}' is expanded only over "
                    f"{[list(t) for t in mat.covered_indices]}",
                ),
                registry.by_code("4.3.2"),
            )
        else:
            report.add(f"MATERIALIZATION:{con.id}", STATUS_PASS)

    bound_rows = [m.bound_row for m in plan.materialized_constraints if m.bound_row is not None]

    for decl in model.variables:
        reg = plan.registration(decl.name)
        if reg is None:
            report.add(
                f"REGISTRATION:{decl.name}",
                STATUS_FAIL,
                (f"variable '{decl.name}' is declared in the model but never registered",),
                registry.by_code("4.1.3"),
            )
            report.add(f"API_DOMAIN:{decl.name}", STATUS_INAPPLICABLE)
            report.add(f"BOUNDS:{decl.name}", STATUS_INAPPLICABLE)
            continue
        report.add(f"REGISTRATION:{decl.name}", STATUS_PASS)

        if reg.api_domain != decl.domain:
            report.add(
                f"API_DOMAIN:{decl.name}",
                STATUS_FAIL,
                (f"variable '{decl.name}' is declared {decl.domain} but registered as {reg.api_domain}",),
                registry.by_code("4.2.1"),
            )
        else:
            report.add(f"API_DOMAIN:{decl.name}", STATUS_PASS)

        # A declared bound may be carried either on the registration or as
        # an explicit row; only flag when neither encodes it.
        def _covered(side: str, declared, api) -> bool:
            if api == declared:
                return True
            return any(r.variable == decl.name and r.side == side and r.value == declared for r in bound_rows)

        lower_ok = decl.lower is None or _covered("lower", decl.lower, reg.api_lower)
        upper_ok = decl.upper is None or _covered("upper", decl.upper, reg.api_upper)
        extra_lower = decl.lower is None and reg.api_lower is not None
        extra_upper = decl.upper is None and reg.api_upper is not None
        if lower_ok and upper_ok and not extra_lower and not extra_upper:
            report.add(f"BOUNDS:{decl.name}", STATUS_PASS)
        else:
            report.add(
                f"BOUNDS:{decl.name}",
                STATUS_FAIL,
                (
                    f"variable '{decl.name}' declares bounds "
                    f"[{decl.lower}, {decl.upper}] but is registered with [{reg.api_lower}, {reg.api_upper}]",
                ),
                registry.by_code("4.2.2"),
            )

    # READOUT: the reported value must undo exactly the negations the plan
    # introduced, and must come from the fresh solve.
    expected_readout = "negated_solved_value" if obj.coefficient_source == "negated" else "solved_value"
    actual = plan.readout.objective_readout
    if actual == "stale":
        report.add(
            "READOUT",
            STATUS_FAIL,
            ("objective readout is marked stale: it does not come from the solve that just ran",),
            registry.by_code("4.5.3"),
        )
    elif actual != expected_readout:
        report.add(
            "READOUT",
            STATUS_FAIL,
            (
                f"coefficient_source='{obj.coefficient_source}' requires readout '{expected_readout}' "
                f"but the plan reports '{actual}'",
            ),
            registry.by_code("4.5.2"),
        )
    else:
        report.add("READOUT", STATUS_PASS)

    # SOLVER_COMPAT: LP-only backend cannot host discrete registrations.
    discrete = sorted(
        reg.name for reg in plan.registered_variables if reg.api_domain in ("integer", "binary")
    )
    if plan.solver_backend in DEFAULT_LP_ONLY_BACKENDS and discrete:
        report.add(
            "SOLVER_COMPAT",
            STATUS_FAIL,
            (f"backend '{plan.solver_backend}' is LP-only but registers discrete variables {discrete}",),
            registry.by_code("4.4.2"),
        )
    else:
        report.add("SOLVER_COMPAT", STATUS_PASS)

    return report


def check_raw_code(
    text: str | None,
    language_tag: str = "python",
    entry_point_token: str = DEFAULT_ENTRY_POINT,
    api_allowlist: tuple[str, ...] = DEFAULT_API_ALLOWLIST,
) -> ContractReport:
    """Shallow token-level screening of raw solver code.

    No parsing and no execution: presence of an entry point, placeholder
    markers, contradictory sense tokens, and unknown solver-API calls.
    """
    report = ContractReport()
    if not text:
        for check_id in ("ENTRY", "PLACEHOLDER", "SENSE_TOKEN", "API_TOKEN"):
            report.add(check_id, STATUS_INAPPLICABLE)
        return report

    if entry_point_token in text:
        report.add("ENTRY", STATUS_PASS)
    else:
        report.add("ENTRY", STATUS_FAIL, (f"no '{entry_point_token}()' entry point found in the code",))

    marker = _PLACEHOLDER_RE.search(text)
    if marker:
        report.add("PLACEHOLDER", STATUS_FAIL, (f"placeholder marker {marker.group(0).strip()!r} left in the code",))
    else:
        report.add("PLACEHOLDER", STATUS_PASS)

    has_min = any(tok in text for tok in _MIN_TOKENS)
    has_max = any(tok in text for tok in _MAX_TOKENS)
    if has_min and has_max:
        report.add("SENSE_TOKEN", STATUS_FAIL, ("code mixes minimize-style and maximize-style sense tokens",))
    else:
        report.add("SENSE_TOKEN", STATUS_PASS)

    unknown = sorted({m.group(1) for m in _API_CALL_RE.finditer(text)} - set(api_allowlist))
    if unknown:
        report.add("API_TOKEN", STATUS_FAIL, (f"calls outside the solver-API allowlist: {unknown}",))
    else:
        report.add("API_TOKEN", STATUS_PASS)

    return report
