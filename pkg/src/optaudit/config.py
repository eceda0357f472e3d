"""Runtime configuration tree.

Loaded from a JSON file of nested sections; CLI flags override file
values; credentials come only from the environment (LLM_API_KEY,
LLM_BASE_URL), never from case files.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .contracts import DEFAULT_API_ALLOWLIST, DEFAULT_ENTRY_POINT
from .errors import SchemaError


@dataclass(frozen=True)
class GatewayConfig:
    backend: str = "heuristic"  # heuristic | replay | remote
    model: str = "default"
    max_inflight: int = 10
    timeout_seconds: float = 60.0
    fixture_dir: str | None = None
    max_output_tokens: int = 2048
    retries: int = 2
    retry_backoff_seconds: float = 1.0


@dataclass(frozen=True)
class DetectorConfig:
    budget: int = 3
    max_findings: int = 3
    rescue: bool = True
    all_experts: bool = False
    prompt_dir: str | None = None


@dataclass(frozen=True)
class ConsolidateConfig:
    tau: float = 0.5
    cap: int = 3
    final_judge: bool = False


@dataclass(frozen=True)
class ContractConfig:
    entry_point_token: str = DEFAULT_ENTRY_POINT
    api_allowlist: tuple[str, ...] = DEFAULT_API_ALLOWLIST
    enabled_checks: tuple[str, ...] = ()  # empty means all


@dataclass(frozen=True)
class ReportConfig:
    analyst_notes: bool = False


@dataclass(frozen=True)
class AppConfig:
    gateway: GatewayConfig = field(default_factory=GatewayConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    consolidate: ConsolidateConfig = field(default_factory=ConsolidateConfig)
    contract: ContractConfig = field(default_factory=ContractConfig)
    report: ReportConfig = field(default_factory=ReportConfig)

    def snapshot(self) -> dict:
        """JSON-friendly view written into run manifests."""
        return {
            "gateway": {
                "backend": self.gateway.backend,
                "model": self.gateway.model,
                "max_inflight": self.gateway.max_inflight,
                "timeout_seconds": self.gateway.timeout_seconds,
                "fixture_dir": self.gateway.fixture_dir,
            },
            "detector": {
                "budget": self.detector.budget,
                "max_findings": self.detector.max_findings,
                "rescue": self.detector.rescue,
                "all_experts": self.detector.all_experts,
            },
            "consolidate": {
                "tau": self.consolidate.tau,
                "cap": self.consolidate.cap,
                "final_judge": self.consolidate.final_judge,
            },
            "contract": {"entry_point_token": self.contract.entry_point_token},
            "report": {"analyst_notes": self.report.analyst_notes},
        }


_SECTIONS = {
    "gateway": GatewayConfig,
    "detector": DetectorConfig,
    "consolidate": ConsolidateConfig,
    "contract": ContractConfig,
    "report": ReportConfig,
}


def _build_section(cls, values: dict) -> Any:
    defaults = cls()
    unknown = set(values) - set(defaults.__dataclass_fields__)
    if unknown:
        raise SchemaError(f"unknown config keys for {cls.__name__}: {sorted(unknown)}")
    coerced = {}
    for key, value in values.items():
        if isinstance(value, list):
            value = tuple(value)
        coerced[key] = value
    return replace(defaults, **coerced)


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> AppConfig:
    """Build an AppConfig from an optional JSON file plus nested overrides.

    ``overrides`` uses the same shape as the file, e.g.
    ``{"gateway": {"backend": "replay"}}``.
    """
    tree: dict[str, dict] = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            loaded = json.load(fh)
        if not isinstance(loaded, dict):
            raise SchemaError("config file must contain a JSON object")
        tree = loaded
    for section, values in (overrides or {}).items():
        tree.setdefault(section, {}).update({k: v for k, v in values.items() if v is not None})

    unknown = set(tree) - set(_SECTIONS)
    if unknown:
        raise SchemaError(f"unknown config sections: {sorted(unknown)}")
    kwargs = {name: _build_section(cls, tree.get(name, {})) for name, cls in _SECTIONS.items()}
    return AppConfig(**kwargs)
