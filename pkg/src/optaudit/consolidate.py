"""Deterministic consolidation: normalization, derivative suppression,
frozen reranking, abstention, and the optional constrained judge pass.

The reranker is rule-based on purpose. Its weights are frozen here and
exercised by the test suite; nothing in this module learns or samples,
so identical pools produce identical ranked output on every platform,
in any input order.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .artifact import DependencyGraph
from .config import AppConfig
from .detector import CandidateFinding, RoutingDecision
from .gateway import Backend, UsageRecord
from .prompts import build_judge_request
from .taxonomy import family_rank

# Frozen priority weights: support and severity dominate, route agreement
# and root-cause specificity break the remaining ground.
W_SEVERITY = 0.30
W_SUPPORT = 0.40
W_ROUTE = 0.15
W_ROOT_CAUSE = 0.15

_SEVERITY_RANK = {"low": 1, "medium": 2, "high": 3}
_PUNCT_RE = re.compile(r"[^\w\s]")


@dataclass
class RankedDiagnosis:
    findings: list[CandidateFinding] = field(default_factory=list)
    abstained: bool = True
    suppressed: list[tuple[str, str]] = field(default_factory=list)  # (finding_id, reason)


def normalize_issue(text: str) -> str:
    """Alias resolution needs a concrete equivalence: lowercase, strip
    punctuation, collapse whitespace."""
    return re.sub(r"\s+", " ", _PUNCT_RE.sub(" ", text.lower())).strip()


def _canonical_order(pool: list[CandidateFinding]) -> list[CandidateFinding]:
    return sorted(
        pool,
        key=lambda f: (
            family_rank(f.label.family),
            f.label.code,
            f.element.local_id,
            normalize_issue(f.canonical_issue),
            -f.support,
            f.finding_id,
        ),
    )


def normalize(
    pool: list[CandidateFinding],
    deps: DependencyGraph | None = None,
) -> tuple[list[CandidateFinding], list[tuple[str, str]]]:
    """Merge aliases, drop marked duplicates, drop grounded verdicts, and
    drop consequences subsumed by a root cause along a dependency edge.

    Input order never matters: everything runs over a canonical ordering
    of the pool.
    """
    suppressed: list[tuple[str, str]] = []
    pool_ids = {f.finding_id for f in pool}
    survivors: list[CandidateFinding] = []

    for finding in _canonical_order(pool):
        if finding.verdict == "grounded":
            suppressed.append((finding.finding_id, "grounded verdict"))
            continue
        if finding.duplicate_of and finding.duplicate_of in pool_ids:
            suppressed.append((finding.finding_id, f"marked duplicate of {finding.duplicate_of}"))
            continue
        survivors.append(finding)

    groups: dict[tuple, list[CandidateFinding]] = {}
    for finding in survivors:
        key = (finding.element, finding.label.family, normalize_issue(finding.canonical_issue))
        groups.setdefault(key, []).append(finding)
    survivors = []
    for members in groups.values():
        kept = max(members, key=lambda f: f.support)  # first maximum in canonical order
        survivors.append(kept)
        for other in members:
            if other is not kept:
                suppressed.append((other.finding_id, f"merged into {kept.finding_id}"))

    if deps is not None:
        subsumed: dict[str, str] = {}
        for root in survivors:
            if not root.is_root_cause:
                continue
            for target in deps.targets_of(root.element):
                for other in survivors:
                    if other.finding_id != root.finding_id and other.element == target:
                        subsumed.setdefault(other.finding_id, root.finding_id)
        remaining = []
        for finding in survivors:
            if finding.finding_id in subsumed:
                suppressed.append((finding.finding_id, f"consequence of root cause {subsumed[finding.finding_id]}"))
            else:
                remaining.append(finding)
        survivors = remaining

    return _canonical_order(survivors), suppressed


def score(finding: CandidateFinding, routing: RoutingDecision) -> float:
    severity = (_SEVERITY_RANK.get(finding.severity, 2) - 1) / 2 * W_SEVERITY
    support = W_SUPPORT * finding.support
    route = W_ROUTE if finding.label.family in routing.active else 0.0
    root = W_ROOT_CAUSE if finding.is_root_cause else 0.0
    return severity + support + route + root


def rerank(
    pool: list[CandidateFinding],
    routing: RoutingDecision,
    config: AppConfig,
) -> RankedDiagnosis:
    """Threshold, order by the frozen score, break ties by (family order,
    numeric code, element id), truncate to the cap."""
    tau = config.consolidate.tau
    cap = config.consolidate.cap
    suppressed: list[tuple[str, str]] = []
    eligible: list[CandidateFinding] = []
    for finding in _canonical_order(pool):
        if finding.support < tau:
            suppressed.append((finding.finding_id, f"support {finding.support} below threshold {tau}"))
        else:
            eligible.append(finding)

    ordered = sorted(
        eligible,
        key=lambda f: (
            -score(f, routing),
            family_rank(f.label.family),
            f.label.code,
            f.element.local_id,
            normalize_issue(f.canonical_issue),
            f.finding_id,
        ),
    )
    for dropped in ordered[cap:]:
        suppressed.append((dropped.finding_id, f"rank beyond cap {cap}"))
    kept = ordered[:cap]
    return RankedDiagnosis(findings=kept, abstained=not kept, suppressed=suppressed)


def consolidate(
    pool: list[CandidateFinding],
    routing: RoutingDecision,
    config: AppConfig,
    deps: DependencyGraph | None = None,
) -> RankedDiagnosis:
    normalized, suppressed = normalize(pool, deps)
    diagnosis = rerank(normalized, routing, config)
    diagnosis.suppressed = suppressed + diagnosis.suppressed
    return diagnosis


def final_judge(
    diagnosis: RankedDiagnosis,
    backend: Backend,
    config: AppConfig,
    usage: UsageRecord | None = None,
) -> RankedDiagnosis:
    """Constrained selection pass: the judge may keep a subset of the
    existing candidate ids and reorder them, nothing else. Any response
    naming an unknown id is discarded and the deterministic order stands."""
    if not config.consolidate.final_judge or not diagnosis.findings:
        return diagnosis
    if backend.kind not in ("remote", "replay"):
        return diagnosis

    candidates = [
        {
            "candidate_id": f.finding_id,
            "code": f.label.code,
            "element": str(f.element),
            "support": f.support,
            "canonical_issue": f.canonical_issue,
            "evidence": list(f.evidence),
        }
        for f in diagnosis.findings
    ]
    try:
        text, call_usage = backend.complete(build_judge_request(candidates, config))
        if usage is not None:
            usage.add(call_usage)
        payload = json.loads(text)
        keep_ids = [str(k) for k in payload.get("keep", [])]
    except Exception:  # noqa: BLE001 - fail open to the deterministic order
        return diagnosis

    known = {f.finding_id: f for f in diagnosis.findings}
    if not keep_ids or any(k not in known for k in keep_ids):
        return diagnosis
    seen: set[str] = set()
    ordered = [known[k] for k in keep_ids if not (k in seen or seen.add(k))]
    ordered = ordered[: config.consolidate.cap]
    dropped = [(f.finding_id, "not selected by final judge") for f in diagnosis.findings if f not in ordered]
    return RankedDiagnosis(
        findings=ordered,
        abstained=not ordered,
        suppressed=diagnosis.suppressed + dropped,
    )
