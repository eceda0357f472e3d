"""Per-case orchestration and benchmark runs.

audit_case wires one case through the chosen detector, deterministic
consolidation, and the optional judge pass. run_benchmark shards a case
set over a bounded worker pool and always emits predictions sorted by
case id, so parallelism never changes output bytes. Per-case backend
failures degrade to abstentions with a diagnostic; the run continues.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import __version__
from .artifact import AuditTuple
from .config import AppConfig
from .consolidate import RankedDiagnosis, consolidate, final_judge
from .detector import AuditRun, audit_single_agent, run_audit_loop
from .errors import BackendError
from .gateway import Backend, UsageRecord
from .taxonomy import TaxonomyRegistry

DETECTOR_ROUTED = "routed"
DETECTOR_SINGLE = "single"


@dataclass
class CaseResult:
    case_id: str
    diagnosis: RankedDiagnosis
    run: AuditRun | None
    usage: UsageRecord
    diagnostics: list[str] = field(default_factory=list)
    degraded: bool = False  # backend failure turned into an abstention

    def prediction_doc(self) -> dict:
        doc = {
            "case_id": self.case_id,
            "findings": [
                {
                    **f.label.as_dict(),
                    "support": f.support,
                }
                for f in self.diagnosis.findings
            ],
        }
        if self.degraded:
            doc["diagnostics"] = list(self.diagnostics)
        return doc


@dataclass
class RunManifest:
    detector: str
    backend_kind: str
    config: dict
    per_case: dict[str, dict] = field(default_factory=dict)
    totals: UsageRecord = field(default_factory=UsageRecord)
    specialist_invocations: int = 0
    wall_time: float = 0.0
    versions: dict = field(default_factory=lambda: {"optaudit": __version__})

    def as_dict(self) -> dict:
        return {
            "detector": self.detector,
            "backend": self.backend_kind,
            "config": self.config,
            "cases": self.per_case,
            "totals": self.totals.as_dict(),
            "specialist_invocations": self.specialist_invocations,
            "wall_time": round(self.wall_time, 6),
            "versions": self.versions,
        }


def audit_case(
    case: AuditTuple,
    backend: Backend,
    registry: TaxonomyRegistry,
    config: AppConfig,
    detector: str = DETECTOR_ROUTED,
) -> CaseResult:
    usage = UsageRecord()
    try:
        if detector == DETECTOR_SINGLE:
            run = audit_single_agent(case, backend, registry, config)
        elif detector == DETECTOR_ROUTED:
            run = run_audit_loop(case, backend, registry, config)
        else:
            raise ValueError(f"unknown detector {detector!r}")
    except BackendError as exc:
        return CaseResult(
            case_id=case.case_id,
            diagnosis=RankedDiagnosis(findings=[], abstained=True),
            run=None,
            usage=usage,
            diagnostics=[f"backend failure, abstaining: {exc}"],
            degraded=True,
        )
    usage.add(run.usage)
    diagnosis = consolidate(run.pool, run.routing, config, run.deps)
    diagnosis = final_judge(diagnosis, backend, config, usage)
    return CaseResult(
        case_id=case.case_id,
        diagnosis=diagnosis,
        run=run,
        usage=usage,
        diagnostics=list(run.diagnostics),
    )


def run_benchmark(
    cases: list[AuditTuple],
    backend: Backend,
    registry: TaxonomyRegistry,
    config: AppConfig,
    detector: str = DETECTOR_ROUTED,
) -> tuple[list[CaseResult], RunManifest]:
    started = time.monotonic()
    manifest = RunManifest(detector=detector, backend_kind=backend.kind, config=config.snapshot())

    def _one(case: AuditTuple) -> CaseResult:
        return audit_case(case, backend, registry, config, detector)

    workers = max(1, config.gateway.max_inflight)
    if workers == 1 or len(cases) <= 1:
        results = [_one(case) for case in cases]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_one, cases))

    results.sort(key=lambda r: r.case_id)
    for result in results:
        manifest.per_case[result.case_id] = result.usage.as_dict()
        manifest.totals.add(result.usage)
        if result.run is not None:
            manifest.specialist_invocations += result.run.specialist_invocations
    manifest.wall_time = time.monotonic() - started
    return results, manifest
