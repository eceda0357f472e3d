import json

from optaudit.config import load_config
from optaudit.consolidate import consolidate
from optaudit.detector import RoutingDecision, run_audit_loop
from optaudit.gateway import ReplayBackend, UsageRecord
from optaudit.injector import RECIPES_BY_CODE, inject
from optaudit.pipeline import CaseResult, audit_case
from optaudit.prompts import build_visualization_request
from optaudit.report import ABSTENTION_SENTENCE, analyst_notes, render_markdown

SECTIONS = ("## Headline", "## Risk by Module", "## Findings", "## Repair Order", "## Suppressed", "## Run Info")


def _result(case, backend, registry, config):
    return audit_case(case, backend, registry, config)


def test_abstention_report_sections(seed_by_id, registry, config, heuristic_backend):
    result = _result(seed_by_id["diet_blend"], heuristic_backend, registry, config)
    text = render_markdown(result, registry, heuristic_backend.kind)
    for section in SECTIONS:
        assert section in text
    assert ABSTENTION_SENTENCE in text
    assert "Nothing to repair." in text


def test_finding_report_mirrors_diagnosis(seed_by_id, registry, config, heuristic_backend):
    injected = inject(RECIPES_BY_CODE["2.2.1"], seed_by_id["knapsack_small"], 0, registry)
    result = _result(injected.case, heuristic_backend, registry, config)
    text = render_markdown(result, registry, heuristic_backend.kind)
    assert not result.diagnosis.abstained
    for finding in result.diagnosis.findings:
        assert finding.label.code in text
        assert f"support: {finding.support:.2f}" in text
        for anchor in finding.evidence:
            assert anchor in text
    # no additions: every code mentioned in the findings section is ranked
    findings_block = text.split("## Findings")[1].split("## Repair Order")[0]
    ranked_codes = {f.label.code for f in result.diagnosis.findings}
    import re

    for code in re.findall(r"\((\d\.\d\.\d)\)", findings_block):
        assert code in ranked_codes


def test_headline_names_the_top_type(seed_by_id, registry, config, heuristic_backend):
    injected = inject(RECIPES_BY_CODE["1.1.1"], seed_by_id["crop_plan"], 0, registry)
    result = _result(injected.case, heuristic_backend, registry, config)
    text = render_markdown(result, registry, heuristic_backend.kind)
    assert 'Most likely defect: "Wrong Optimization Direction" (1.1.1)' in text


def test_suppressed_section_lists_reasons(seed_by_id, registry, config, heuristic_backend):
    # a plan-sense flip yields both 1.1.1-adjacent evidence and a 4.1.1
    # contract finding; whatever is suppressed must be listed with a reason
    injected = inject(RECIPES_BY_CODE["1.1.1"], seed_by_id["diet_blend"], 0, registry)
    run = run_audit_loop(injected.case, heuristic_backend, registry, config)
    diagnosis = consolidate(run.pool, run.routing, config, run.deps)
    result = CaseResult(case_id=injected.case.case_id, diagnosis=diagnosis, run=run, usage=run.usage)
    text = render_markdown(result, registry, heuristic_backend.kind)
    assert "## Suppressed" in text


def test_analyst_notes_via_replay(tmp_path, seed_by_id, registry):
    config = load_config(
        overrides={
            "gateway": {"backend": "replay", "fixture_dir": str(tmp_path)},
            "report": {"analyst_notes": True},
        }
    )
    backend = ReplayBackend(tmp_path)
    result = CaseResult(
        case_id="diet_blend",
        diagnosis=consolidate([], RoutingDecision(active=(), cues=()), config),
        run=None,
        usage=UsageRecord(),
    )
    request = build_visualization_request(ABSTENTION_SENTENCE, config)
    ReplayBackend.store(tmp_path, request, json.dumps({"headline": "all clear", "notes": ["nothing stands out"]}))
    notes = analyst_notes(result, backend, config)
    assert notes == ["nothing stands out"]
    text = render_markdown(result, registry, backend.kind, notes)
    assert "> nothing stands out" in text


def test_analyst_notes_disabled_offline(seed_by_id, registry, config, heuristic_backend):
    result = _result(seed_by_id["diet_blend"], heuristic_backend, registry, config)
    assert analyst_notes(result, heuristic_backend, config) == []
