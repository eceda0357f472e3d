"""Immutable registry of the four-family hallucination taxonomy.

The registry ships as a data asset (``data/taxonomy.json``) rather than
hard-coded tables, so a typo fix never requires touching code; the count
invariants below guard the asset against accidental edits. Specific-type
totals are pinned at 18 objective, 18 variable, 31 constraint, and 16
implementation types (83 overall), with 5/5/9/5 subcategories.
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib.resources import files
from pathlib import Path
from typing import Iterator

from .errors import CountMismatchError, SchemaError, UnknownLabelError


class Family(str, Enum):
    """The four disjoint failure families, in fixed tie-break order."""

    OBJECTIVE = "objective"
    VARIABLE = "variable"
    CONSTRAINT = "constraint"
    IMPLEMENTATION = "implementation"


FAMILY_ORDER: tuple[Family, ...] = tuple(Family)

_EXPECTED_TYPE_COUNTS = {
    Family.OBJECTIVE: 18,
    Family.VARIABLE: 18,
    Family.CONSTRAINT: 31,
    Family.IMPLEMENTATION: 16,
}
_EXPECTED_SUBCAT_COUNTS = {
    Family.OBJECTIVE: 5,
    Family.VARIABLE: 5,
    Family.CONSTRAINT: 9,
    Family.IMPLEMENTATION: 5,
}

HIT_NONE = "none"
HIT_FAMILY = "family"
HIT_SUBCATEGORY = "subcategory"
HIT_SPECIFIC = "specific"


def family_rank(family: Family) -> int:
    return FAMILY_ORDER.index(family)


def _normalize(text: str) -> str:
    return re.sub(r"\s+", " ", text.strip()).lower()


@dataclass(frozen=True)
class LabelPath:
    """A (family, subcategory, specific-type) coordinate into the taxonomy."""

    family: Family
    subcategory: str
    specific: str
    code: str

    def as_dict(self) -> dict:
        return {
            "family": self.family.value,
            "subcategory": self.subcategory,
            "specific": self.specific,
            "code": self.code,
        }


@dataclass(frozen=True)
class TypeNode:
    id: str
    name: str
    code: str
    definition: str


@dataclass(frozen=True)
class SubcategoryNode:
    id: str
    name: str
    types: tuple[TypeNode, ...]


@dataclass(frozen=True)
class FamilyNode:
    family: Family
    name: str
    subcategories: tuple[SubcategoryNode, ...]


@dataclass(frozen=True)
class TaxonomyRegistry:
    """Loaded taxonomy tree with resolution indexes.

    Immutable after load; safe to share between concurrent case audits.
    """

    families: tuple[FamilyNode, ...]
    _by_code: dict[str, LabelPath] = field(repr=False, compare=False, default_factory=dict)
    _by_names: dict[tuple[str, str, str], LabelPath] = field(repr=False, compare=False, default_factory=dict)
    _display: dict[str, tuple[str, str, str]] = field(repr=False, compare=False, default_factory=dict)
    _definitions: dict[str, str] = field(repr=False, compare=False, default_factory=dict)

    def labels(self) -> Iterator[LabelPath]:
        for code in sorted(self._by_code):
            yield self._by_code[code]

    def by_code(self, code: str) -> LabelPath:
        try:
            return self._by_code[code]
        except KeyError:
            raise UnknownLabelError(f"no taxonomy type with code {code!r}") from None

    def has_code(self, code: str) -> bool:
        return code in self._by_code

    def display_names(self, label: LabelPath) -> tuple[str, str, str]:
        """(family name, subcategory name, type name) for report rendering."""
        return self._display[label.code]

    def definition(self, label: LabelPath) -> str:
        return self._definitions[label.code]

    def resolve(self, family: str, subcategory: str, specific: str) -> LabelPath:
        """Resolve display names or slug ids to the unique LabelPath.

        Matching is case-insensitive after whitespace normalization.
        """
        key = (_normalize(family), _normalize(subcategory), _normalize(specific))
        try:
            return self._by_names[key]
        except KeyError:
            raise UnknownLabelError(
                f"no taxonomy entry for family={family!r} subcategory={subcategory!r} specific={specific!r}"
            ) from None

    def family_node(self, family: Family) -> FamilyNode:
        for node in self.families:
            if node.family is family:
                return node
        raise UnknownLabelError(f"unknown family {family!r}")

    def taxonomy_block(self, family: Family | None = None) -> str:
        """Plain-text listing injected into prompts.

        One family, or the whole tree when ``family`` is None.
        """
        lines: list[str] = []
        nodes = [self.family_node(family)] if family else list(self.families)
        for fam in nodes:
            lines.append(f"{fam.family.value}: {fam.name}")
            for sub in fam.subcategories:
                lines.append(f"  {sub.name}")
                for t in sub.types:
                    lines.append(f"    {t.code} {t.name}: {t.definition}")
        return "\n".join(lines)


def resolve_label(registry: TaxonomyRegistry, family: str, subcategory: str, specific: str) -> LabelPath:
    return registry.resolve(family, subcategory, specific)


def hit_level(predicted: LabelPath, gold: LabelPath) -> str:
    """Depth of agreement between a predicted and a gold label.

    Deeper levels require all shallower coordinates to match, mirroring
    the nested Top-1 counting rules.
    """
    if predicted.family is not gold.family:
        return HIT_NONE
    if predicted.subcategory != gold.subcategory:
        return HIT_FAMILY
    if predicted.specific != gold.specific:
        return HIT_SUBCATEGORY
    return HIT_SPECIFIC


def bundled_taxonomy_path() -> Path:
    return Path(str(files("optaudit").joinpath("data/taxonomy.json")))


def load_registry(source: str | Path | dict | None = None) -> TaxonomyRegistry:
    """Load and validate the registry from a file path or parsed document.

    Raises SchemaError on malformed structure or duplicate ids, and
    CountMismatchError when family/subcategory totals drift from the
    fixed 18/18/31/16 and 5/5/9/5 layout.
    """
    if source is None:
        source = bundled_taxonomy_path()
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as fh:
            doc = json.load(fh)
    else:
        doc = source

    if not isinstance(doc, dict) or not isinstance(doc.get("families"), list):
        raise SchemaError("taxonomy document must be an object with a 'families' list")

    families: list[FamilyNode] = []
    by_code: dict[str, LabelPath] = {}
    by_names: dict[tuple[str, str, str], LabelPath] = {}
    display: dict[str, tuple[str, str, str]] = {}
    definitions: dict[str, str] = {}
    seen_ids: set[str] = set()

    for fam_doc in doc["families"]:
        try:
            family = Family(fam_doc["id"])
        except (KeyError, ValueError, TypeError):
            raise SchemaError(f"unknown family id in taxonomy document: {fam_doc.get('id')!r}")
        fam_name = fam_doc.get("name", family.value)
        subcats: list[SubcategoryNode] = []
        for sub_doc in fam_doc.get("subcategories", []):
            types: list[TypeNode] = []
            for t_doc in sub_doc.get("types", []):
                missing = {"id", "name", "code", "definition"} - set(t_doc)
                if missing:
                    raise SchemaError(f"taxonomy type missing fields {sorted(missing)}: {t_doc.get('code')!r}")
                node = TypeNode(t_doc["id"], t_doc["name"], t_doc["code"], t_doc["definition"])
                if node.code in by_code or node.id in seen_ids:
                    raise SchemaError(f"duplicate taxonomy id or code: {node.code} ({node.id})")
                seen_ids.add(node.id)
                label = LabelPath(family, sub_doc["id"], node.id, node.code)
                by_code[node.code] = label
                definitions[node.code] = node.definition
                display[node.code] = (fam_name, sub_doc["name"], node.name)
                for f_key in (family.value, fam_name):
                    for s_key in (sub_doc["id"], sub_doc["name"]):
                        for t_key in (node.id, node.name, node.code):
                            by_names[(_normalize(f_key), _normalize(s_key), _normalize(t_key))] = label
                types.append(node)
            if sub_doc["id"] in seen_ids:
                raise SchemaError(f"duplicate subcategory id: {sub_doc['id']}")
            seen_ids.add(sub_doc["id"])
            subcats.append(SubcategoryNode(sub_doc["id"], sub_doc["name"], tuple(types)))
        families.append(FamilyNode(family, fam_name, tuple(subcats)))

    loaded = {node.family for node in families}
    if loaded != set(Family):
        raise SchemaError(f"taxonomy document must define all four families, got {sorted(f.value for f in loaded)}")

    for node in families:
        n_types = sum(len(s.types) for s in node.subcategories)
        if n_types != _EXPECTED_TYPE_COUNTS[node.family]:
            raise CountMismatchError(
                f"family {node.family.value} has {n_types} specific types, expected {_EXPECTED_TYPE_COUNTS[node.family]}"
            )
        if len(node.subcategories) != _EXPECTED_SUBCAT_COUNTS[node.family]:
            raise CountMismatchError(
                f"family {node.family.value} has {len(node.subcategories)} subcategories, "
                f"expected {_EXPECTED_SUBCAT_COUNTS[node.family]}"
            )

    return TaxonomyRegistry(
        families=tuple(families),
        _by_code=by_code,
        _by_names=by_names,
        _display=display,
        _definitions=definitions,
    )
