"""Pluggable model backends with fingerprinting and usage accounting.

Three backends share one interface: ``remote`` speaks a chat-completion
wire protocol over HTTP, ``replay`` serves canned responses from a
directory of fingerprint-named files (the deterministic test surface),
and ``heuristic_stub`` returns an empty response so detector wiring stays
uniform when the heuristic specialists bypass the gateway entirely.
"""
from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .artifact import ElementRef
from .config import GatewayConfig
from .errors import BackendError, FixtureMissError, ResponseParseError
from .taxonomy import Family, LabelPath, TaxonomyRegistry

VERDICTS = ("grounded", "needs_review", "hallucinated")
SEVERITIES = ("low", "medium", "high")


@dataclass(frozen=True)
class ChatRequest:
    """One structured-output request. Temperature stays 0 so reported
    runs are deterministic evaluations, not sampling experiments."""

    messages: tuple[tuple[str, str], ...]  # (role, content)
    response_schema_id: str
    temperature: float = 0.0
    max_output_tokens: int = 2048
    route: str = ""


@dataclass
class UsageRecord:
    input_tokens: int = 0
    output_tokens: int = 0
    call_count: int = 0
    specialist_call_count: int = 0
    wall_time: float = 0.0

    def add(self, other: "UsageRecord") -> None:
        self.input_tokens += other.input_tokens
        self.output_tokens += other.output_tokens
        self.call_count += other.call_count
        self.specialist_call_count += other.specialist_call_count
        self.wall_time += other.wall_time

    def as_dict(self) -> dict:
        return {
            "input_tokens": self.input_tokens,
            "output_tokens": self.output_tokens,
            "call_count": self.call_count,
            "specialist_call_count": self.specialist_call_count,
            "wall_time": round(self.wall_time, 6),
        }


def fingerprint(request: ChatRequest) -> str:
    """Stable digest over (messages, schema id); canonical serialization
    first, so field order never matters."""
    payload = json.dumps(
        {"messages": [[role, content] for role, content in request.messages], "schema": request.response_schema_id},
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def _approx_tokens(text: str) -> int:
    # Deterministic stand-in used by offline backends.
    return max(1, len(text) // 4)


class Backend:
    kind = "abstract"

    def complete(self, request: ChatRequest) -> tuple[str, UsageRecord]:
        raise NotImplementedError


class HeuristicStubBackend(Backend):
    """Empty responses; exists so the call graph is identical whether or
    not a live model sits behind it."""

    kind = "heuristic_stub"

    def complete(self, request: ChatRequest) -> tuple[str, UsageRecord]:
        return "", UsageRecord(call_count=1)


class ReplayBackend(Backend):
    kind = "replay"

    def __init__(self, fixture_dir: str | Path):
        self.fixture_dir = Path(fixture_dir)

    def complete(self, request: ChatRequest) -> tuple[str, UsageRecord]:
        digest = fingerprint(request)
        path = self.fixture_dir / f"{digest}.txt"
        if not path.exists():
            raise FixtureMissError(f"no replay fixture for fingerprint {digest} (route={request.route})")
        text = path.read_text(encoding="utf-8")
        prompt_len = sum(_approx_tokens(content) for _, content in request.messages)
        return text, UsageRecord(
            input_tokens=prompt_len,
            output_tokens=_approx_tokens(text),
            call_count=1,
        )

    @staticmethod
    def store(fixture_dir: str | Path, request: ChatRequest, response: str) -> Path:
        """Write a canned response for a request; used by tests and by
        recording tooling."""
        path = Path(fixture_dir) / f"{fingerprint(request)}.txt"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(response, encoding="utf-8")
        return path


class RemoteBackend(Backend):
    """Minimal chat-completion client.

    Endpoint and credential come from LLM_BASE_URL / LLM_API_KEY; two
    retries with fixed backoff, then BackendError.
    """

    kind = "remote"

    def __init__(self, config: GatewayConfig):
        base_url = os.environ.get("LLM_BASE_URL")
        api_key = os.environ.get("LLM_API_KEY")
        if not base_url or not api_key:
            raise BackendError("remote backend requires LLM_BASE_URL and LLM_API_KEY in the environment")
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.config = config
        self._semaphore = threading.BoundedSemaphore(config.max_inflight)

    def complete(self, request: ChatRequest) -> tuple[str, UsageRecord]:
        import httpx

        body = {
            "model": self.config.model,
            "messages": [{"role": role, "content": content} for role, content in request.messages],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "response_format": {"type": "json_object", "schema_id": request.response_schema_id},
        }
        last_error: Exception | None = None
        for attempt in range(self.config.retries + 1):
            if attempt:
                time.sleep(self.config.retry_backoff_seconds)
            started = time.monotonic()
            try:
                with self._semaphore:
                    response = httpx.post(
                        f"{self.base_url}/chat/completions",
                        json=body,
                        headers={"Authorization": f"Bearer {self.api_key}"},
                        timeout=self.config.timeout_seconds,
                    )
                response.raise_for_status()
                payload = response.json()
                text = payload["choices"][0]["message"]["content"]
                usage = payload.get("usage", {})
                return text, UsageRecord(
                    input_tokens=int(usage.get("prompt_tokens", 0)),
                    output_tokens=int(usage.get("completion_tokens", 0)),
                    call_count=1,
                    wall_time=time.monotonic() - started,
                )
            except Exception as exc:  # noqa: BLE001 - every transport failure maps to BackendError
                last_error = exc
        raise BackendError(f"remote completion failed after {self.config.retries + 1} attempts: {last_error}")


def make_backend(config: GatewayConfig) -> Backend:
    if config.backend in ("heuristic", "heuristic_stub"):
        return HeuristicStubBackend()
    if config.backend == "replay":
        if not config.fixture_dir:
            raise BackendError("replay backend requires gateway.fixture_dir")
        return ReplayBackend(config.fixture_dir)
    if config.backend == "remote":
        return RemoteBackend(config)
    raise BackendError(f"unknown gateway backend {config.backend!r}")


# ---------------------------------------------------------------------------
# structured-output parsing

@dataclass(frozen=True)
class ParsedFinding:
    """A finding as it leaves response parsing, before pool assembly."""

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


@dataclass
class ParseOutcome:
    findings: list[ParsedFinding] = field(default_factory=list)
    dependency_notes: list[dict] = field(default_factory=list)
    diagnostics: list[str] = field(default_factory=list)


def _parse_element(raw, default_kind: str = "objective") -> ElementRef:
    if isinstance(raw, dict):
        return ElementRef(raw.get("artifact", "model"), raw.get("kind", default_kind), str(raw.get("local_id", "")))
    if isinstance(raw, str) and raw:
        parts = raw.split("/", 2)
        if len(parts) == 3:
            return ElementRef(parts[0], parts[1], parts[2])
        return ElementRef("model", default_kind, raw)
    return ElementRef("model", default_kind, "")


def _resolve_record_label(record: dict, registry: TaxonomyRegistry) -> LabelPath:
    code = record.get("code")
    if code:
        return registry.by_code(str(code))
    return registry.resolve(
        str(record.get("family", "")),
        str(record.get("subcategory", "")),
        str(record.get("specific", "")),
    )


def parse_findings(
    response: str,
    registry: TaxonomyRegistry,
    family_filter: Family | None = None,
) -> ParseOutcome:
    """Parse a structured response leniently, one record at a time.

    Records with an unknown label, a bad verdict, support outside [0, 1],
    or a hallucinated verdict without evidence are rejected individually
    with a diagnostic; one broken record never sinks the audit. A response
    that is not structured output at all raises ResponseParseError.
    """
    try:
        payload = json.loads(response)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ResponseParseError(f"response is not structured output: {exc}") from exc
    if isinstance(payload, list):
        payload = {"findings": payload}
    if not isinstance(payload, dict):
        raise ResponseParseError("structured response must be an object or array")

    outcome = ParseOutcome()
    records = payload.get("findings", [])
    if not isinstance(records, list):
        raise ResponseParseError("'findings' must be an array")

    for i, record in enumerate(records):
        if not isinstance(record, dict):
            outcome.diagnostics.append(f"record {i}: not an object, dropped")
            continue
        try:
            label = _resolve_record_label(record, registry)
        except Exception as exc:  # noqa: BLE001 - record-level rejection is the contract
            outcome.diagnostics.append(f"record {i}: unresolvable label ({exc}), dropped")
            continue
        if family_filter is not None and label.family is not family_filter:
            outcome.diagnostics.append(
                f"record {i}: out-of-family label {label.code} dropped by {family_filter.value} filter"
            )
            continue
        verdict = record.get("verdict")
        if verdict not in VERDICTS:
            outcome.diagnostics.append(f"record {i}: missing or invalid verdict {verdict!r}, dropped")
            continue
        support = record.get("support")
        if not isinstance(support, (int, float)) or isinstance(support, bool) or not 0.0 <= float(support) <= 1.0:
            outcome.diagnostics.append(f"record {i}: support {support!r} outside [0, 1], dropped")
            continue
        evidence = tuple(str(e) for e in record.get("evidence", []) if str(e))
        if verdict == "hallucinated" and not evidence:
            outcome.diagnostics.append(f"record {i}: hallucinated verdict without evidence, dropped")
            continue
        severity = record.get("severity", "medium")
        if severity not in SEVERITIES:
            severity = "medium"
        outcome.findings.append(
            ParsedFinding(
                element=_parse_element(record.get("element"), default_kind=label.family.value),
                label=label,
                verdict=verdict,
                support=float(support),
                evidence=evidence,
                canonical_issue=str(record.get("canonical_issue", "")),
                is_root_cause=bool(record.get("is_root_cause", False)),
                duplicate_of=record.get("duplicate_of") or None,
                severity=severity,
                repair=str(record.get("repair", "")),
            )
        )

    notes = payload.get("dependency_notes", [])
    if isinstance(notes, list):
        outcome.dependency_notes = [n for n in notes if isinstance(n, dict)]
    return outcome
