"""Access to the bundled clean seed fixtures.

Each seed is a certified-style case: problem text, a full gold schema,
a symbolic model, an identity (or equivalently faithful) materialization
plan, and clean solver code. They drive the clean-restraint checks and
feed the error injector.
"""
from __future__ import annotations

import json
from importlib.resources import files
from pathlib import Path

from .artifact import AuditTuple, parse_case


def bundled_seed_dir() -> Path:
    return Path(str(files("optaudit").joinpath("data/seeds")))


def load_bundled_seeds() -> list[AuditTuple]:
    seeds = []
    for path in sorted(bundled_seed_dir().glob("*.json")):
        with open(path, encoding="utf-8") as fh:
            seeds.append(parse_case(json.load(fh)))
    return seeds
