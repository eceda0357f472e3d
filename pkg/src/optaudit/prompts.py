"""Prompt assets and request assembly.

Role prompts are external data files (one per role) so wording changes
never require a code edit. Builders are pure: the same case, config, and
registry always produce the same ChatRequest, which is what makes replay
fingerprinting and the determinism tests possible.
"""
from __future__ import annotations

from functools import lru_cache
from importlib.resources import files
from pathlib import Path

from .artifact import AuditTuple, SemanticSchema, render_model_text, render_plan_text
from .config import AppConfig
from .contracts import ContractReport
from .gateway import ChatRequest
from .taxonomy import Family, TaxonomyRegistry

ROLES = (
    "conductor",
    "objective",
    "variable",
    "constraint",
    "implementation",
    "judge",
    "visualization",
    "single_agent",
)


@lru_cache(maxsize=None)
def _bundled(role: str) -> str:
    return files("optaudit").joinpath(f"data/prompts/{role}.txt").read_text(encoding="utf-8")


def load_role_prompt(role: str, prompt_dir: str | None = None) -> str:
    if role not in ROLES:
        raise ValueError(f"unknown prompt role {role!r}")
    if prompt_dir:
        override = Path(prompt_dir) / f"{role}.txt"
        if override.exists():
            return override.read_text(encoding="utf-8")
    return _bundled(role)


def fill(template: str, **values: object) -> str:
    """Literal placeholder substitution; templates may contain JSON braces,
    so str.format is off the table."""
    for key, value in values.items():
        template = template.replace("{" + key + "}", str(value))
    return template


def _render_schema(schema: SemanticSchema | None) -> str:
    if schema is None or schema == SemanticSchema():
        return "(no extracted schema)"
    lines = []
    if schema.entities:
        lines.append("entities: " + ", ".join(schema.entities))
    for req in schema.hard_requirements:
        parts = [f"kind={req.kind}"]
        if req.target:
            parts.append(f"target={req.target}")
        for key, value in (
            ("sense", req.sense),
            ("relation", req.relation),
            ("value", req.value),
            ("domain", req.domain),
            ("sign", req.sign),
        ):
            if value is not None:
                parts.append(f"{key}={value}")
        if req.pooled:
            parts.append("pooled=true")
        lines.append("requires " + " ".join(parts))
    for pref in schema.soft_preferences:
        lines.append(f"prefers {pref}")
    return "\n".join(lines)


def _case_block(case: AuditTuple, schema: SemanticSchema | None) -> str:
    sections = [
        "Problem statement:\n" + case.problem.text,
        "Extracted requirements:\n" + _render_schema(schema),
        "Symbolic model:\n" + render_model_text(case.model),
        "Materialization plan:\n" + render_plan_text(case.plan),
    ]
    if case.plan.raw_code is not None:
        sections.append(f"Solver code ({case.plan.raw_code.language}):\n" + case.plan.raw_code.text)
    return "\n\n".join(sections)


def build_conductor_request(case: AuditTuple, config: AppConfig) -> ChatRequest:
    system = load_role_prompt("conductor", config.detector.prompt_dir)
    return ChatRequest(
        messages=(("system", system), ("user", "Problem statement:\n" + case.problem.text)),
        response_schema_id="schema_v1",
        max_output_tokens=config.gateway.max_output_tokens,
        route="conductor",
    )


def build_specialist_request(
    family: Family,
    case: AuditTuple,
    schema: SemanticSchema | None,
    registry: TaxonomyRegistry,
    config: AppConfig,
    contract: ContractReport | None = None,
) -> ChatRequest:
    system = fill(
        load_role_prompt(family.value, config.detector.prompt_dir),
        taxonomy_block=registry.taxonomy_block(family),
        max_findings=config.detector.max_findings,
    )
    user = _case_block(case, schema)
    if family is Family.IMPLEMENTATION and contract is not None and contract.fails():
        notes = "\n".join(
            f"- {check.check_id}: {'; '.join(check.evidence)}"
            + (f" (suggested type {check.suggested_label.code})" if check.suggested_label else "")
            for check in contract.fails()
        )
        user += "\n\nDeterministic contract notes (failed checks):\n" + notes
    return ChatRequest(
        messages=(("system", system), ("user", user)),
        response_schema_id="findings_v1",
        max_output_tokens=config.gateway.max_output_tokens,
        route=f"specialist:{family.value}",
    )


def build_single_agent_request(case: AuditTuple, registry: TaxonomyRegistry, config: AppConfig) -> ChatRequest:
    system = fill(
        load_role_prompt("single_agent", config.detector.prompt_dir),
        taxonomy_block=registry.taxonomy_block(),
        max_findings=config.detector.max_findings,
    )
    return ChatRequest(
        messages=(("system", system), ("user", _case_block(case, case.problem.schema))),
        response_schema_id="findings_v1",
        max_output_tokens=config.gateway.max_output_tokens,
        route="single_agent",
    )


def build_judge_request(candidates: list[dict], config: AppConfig) -> ChatRequest:
    system = load_role_prompt("judge", config.detector.prompt_dir)
    listing = "\n".join(
        f"- candidate_id={c['candidate_id']} type={c['code']} element={c['element']} "
        f"support={c['support']} issue={c['canonical_issue']!r} evidence={c['evidence']}"
        for c in candidates
    )
    return ChatRequest(
        messages=(("system", system), ("user", "Candidate findings:\n" + listing)),
        response_schema_id="judge_v1",
        max_output_tokens=config.gateway.max_output_tokens,
        route="judge",
    )


def build_visualization_request(summary: str, config: AppConfig) -> ChatRequest:
    system = load_role_prompt("visualization", config.detector.prompt_dir)
    return ChatRequest(
        messages=(("system", system), ("user", summary)),
        response_schema_id="viz_v1",
        max_output_tokens=config.gateway.max_output_tokens,
        route="visualization",
    )
