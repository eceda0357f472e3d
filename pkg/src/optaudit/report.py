"""Markdown audit report emitter.

Section layout is fixed (Headline, Risk by Module, Findings, Repair
Order, Suppressed, Run Info) and the findings section mirrors the ranked
diagnosis exactly: same labels, same supports, no additions. The
abstention sentence is verbatim-stable so downstream greps keep working.
"""
from __future__ import annotations

import json

from .config import AppConfig
from .consolidate import RankedDiagnosis
from .gateway import Backend
from .pipeline import CaseResult
from .prompts import build_visualization_request
from .taxonomy import Family, TaxonomyRegistry

ABSTENTION_SENTENCE = "No supported hallucination found; detector abstained."


def _headline(diagnosis: RankedDiagnosis, registry: TaxonomyRegistry) -> str:
    if diagnosis.abstained:
        return ABSTENTION_SENTENCE
    top = diagnosis.findings[0]
    _, _, type_name = registry.display_names(top.label)
    return (
        f'Most likely defect: "{type_name}" ({top.label.code}) at {top.element}, '
        f"support {top.support:.2f}."
    )


def _risk_rows(diagnosis: RankedDiagnosis) -> list[str]:
    rows = []
    for family in Family:
        members = [f for f in diagnosis.findings if f.label.family is family]
        if members:
            rows.append(
                f"- {family.value}: {len(members)} finding(s), max support "
                f"{max(f.support for f in members):.2f}"
            )
        else:
            rows.append(f"- {family.value}: no surviving findings")
    return rows


def analyst_notes(
    result: CaseResult,
    backend: Backend,
    config: AppConfig,
) -> list[str]:
    """Optional LLM-written reading aids; empty offline or on any failure."""
    if not config.report.analyst_notes or backend.kind not in ("remote", "replay"):
        return []
    summary = "\n".join(
        f"- {f.label.code} at {f.element}: {f.canonical_issue} (support {f.support:.2f})"
        for f in result.diagnosis.findings
    ) or ABSTENTION_SENTENCE
    try:
        text, usage = backend.complete(build_visualization_request(summary, config))
        result.usage.add(usage)
        payload = json.loads(text)
        return [str(n) for n in payload.get("notes", [])][:3]
    except Exception:  # noqa: BLE001 - notes are decoration, never a failure source
        return []


def render_markdown(
    result: CaseResult,
    registry: TaxonomyRegistry,
    backend_kind: str,
    notes: list[str] | None = None,
) -> str:
    diagnosis = result.diagnosis
    lines = [f"# Audit report: {result.case_id}", ""]

    lines += ["## Headline", "", _headline(diagnosis, registry), ""]
    for note in notes or []:
        lines.append(f"> {note}")
    if notes:
        lines.append("")

    lines += ["## Risk by Module", ""]
    lines += _risk_rows(diagnosis)
    lines.append("")

    lines += ["## Findings", ""]
    if diagnosis.abstained:
        lines += [ABSTENTION_SENTENCE, ""]
    else:
        for rank, finding in enumerate(diagnosis.findings, start=1):
            fam_name, sub_name, type_name = registry.display_names(finding.label)
            lines += [
                f"{rank}. **{type_name}** ({finding.label.code}) — {fam_name} / {sub_name}",
                f"   - element: `{finding.element}`",
                f"   - verdict: {finding.verdict}, support: {finding.support:.2f}, severity: {finding.severity}",
                f"   - issue: {finding.canonical_issue}",
            ]
            for anchor in finding.evidence:
                lines.append(f"   - evidence: {anchor}")
        lines.append("")

    lines += ["## Repair Order", ""]
    if diagnosis.abstained:
        lines += ["Nothing to repair.", ""]
    else:
        for rank, finding in enumerate(diagnosis.findings, start=1):
            lines.append(f"{rank}. {finding.repair or 'review ' + str(finding.element)}")
        lines.append("")

    lines += ["## Suppressed", ""]
    if diagnosis.suppressed:
        for finding_id, reason in diagnosis.suppressed:
            lines.append(f"- {finding_id}: {reason}")
    else:
        lines.append("- none")
    lines.append("")

    lines += ["## Run Info", ""]
    lines.append(f"- backend: {backend_kind}")
    lines.append(f"- usage: {result.usage.as_dict()}")
    if result.run is not None:
        lines.append(f"- routed branches: {[f.value for f in result.run.routing.active]}")
        lines.append(f"- iterations: {result.run.iterations}")
    for diag in result.diagnostics:
        lines.append(f"- diagnostic: {diag}")
    lines.append("")
    return "\n".join(lines)
