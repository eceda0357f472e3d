"""Exact metric formulas for the three benchmark kinds.

Every rate and F1 is computed as an exact Fraction and only converted to
float at the reporting boundary, so the test suite can demand equality
with an independent brute-force oracle rather than approximate closeness.

Clean: EmptyReportRate and the mean finding count.
Injected: nested Top-1 hits at family, subcategory, and specific depth,
where an empty report misses at every level and a deeper hit requires
every shallower coordinate to match.
Natural: multi-label F1 per family channel plus an artifact-level
hallucination channel lifted from the family labels, with macro and
micro aggregates. A channel with no gold and no predicted positives
scores 1 by convention (vacuous perfection, reported with supports so
it is auditable).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import EmptyCaseSetError, MissingGoldError, NonFiniteValueError
from .taxonomy import (
    HIT_NONE,
    HIT_SPECIFIC,
    HIT_SUBCATEGORY,
    Family,
    LabelPath,
    hit_level,
)

HALL_CHANNEL = "hall"


@dataclass(frozen=True)
class Prediction:
    case_id: str
    findings: tuple[tuple[LabelPath, float], ...]  # ranked (label, support)

    def top(self) -> LabelPath | None:
        return self.findings[0][0] if self.findings else None

    def families(self) -> set[Family]:
        return {label.family for label, _ in self.findings}


@dataclass(frozen=True)
class NaturalGold:
    case_id: str
    is_incorrect: bool
    category_positives: tuple[tuple[Family, bool], ...]

    def positive(self, family: Family) -> bool:
        for fam, value in self.category_positives:
            if fam is family:
                return value
        return False


@dataclass
class MetricReport:
    benchmark_kind: str
    values: dict[str, Fraction] = field(default_factory=dict)
    supports: dict[str, int] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "benchmark_kind": self.benchmark_kind,
            "values": {k: float(v) for k, v in self.values.items()},
            "values_exact": {k: f"{v.numerator}/{v.denominator}" for k, v in self.values.items()},
            "supports": dict(self.supports),
        }

    def table(self) -> str:
        width = max((len(k) for k in self.values), default=10)
        lines = [f"benchmark: {self.benchmark_kind}"]
        for name, value in self.values.items():
            support = f"  (n={self.supports[name]})" if name in self.supports else ""
            lines.append(f"  {name.ljust(width)}  {float(value):.4f}{support}")
        return "\n".join(lines)


def score_clean(predictions: list[Prediction]) -> MetricReport:
    if not predictions:
        raise EmptyCaseSetError("clean scoring needs at least one case")
    n = len(predictions)
    empty = sum(1 for p in predictions if not p.findings)
    total = sum(len(p.findings) for p in predictions)
    return MetricReport(
        benchmark_kind="clean",
        values={
            "EmptyReportRate": Fraction(empty, n),
            "MeanFindings_clean": Fraction(total, n),
        },
        supports={"EmptyReportRate": n, "MeanFindings_clean": n},
    )


def score_injected(predictions: list[Prediction], golds: dict[str, LabelPath]) -> MetricReport:
    if not predictions:
        raise EmptyCaseSetError("injected scoring needs at least one case")
    major = subcat = specific = 0
    total = 0
    for pred in predictions:
        gold = golds.get(pred.case_id)
        if gold is None:
            raise MissingGoldError(f"no gold label for case {pred.case_id!r}")
        total += len(pred.findings)
        top = pred.top()
        if top is None:
            continue
        level = hit_level(top, gold)
        if level != HIT_NONE:
            major += 1
        if level in (HIT_SUBCATEGORY, HIT_SPECIFIC):
            subcat += 1
        if level == HIT_SPECIFIC:
            specific += 1
    n = len(predictions)
    return MetricReport(
        benchmark_kind="injected",
        values={
            "Top1MajorCategoryHit": Fraction(major, n),
            "Top1SubcategoryHit": Fraction(subcat, n),
            "Top1SpecificTypeHit": Fraction(specific, n),
            "MeanFindings": Fraction(total, n),
        },
        supports={"Top1MajorCategoryHit": n, "Top1SubcategoryHit": n, "Top1SpecificTypeHit": n},
    )


def _f1(tp: int, fp: int, fn: int) -> Fraction:
    if tp == fp == fn == 0:
        return Fraction(1)
    return Fraction(2 * tp, 2 * tp + fp + fn)


def score_natural(predictions: list[Prediction], golds: dict[str, NaturalGold]) -> MetricReport:
    if not predictions:
        raise EmptyCaseSetError("natural scoring needs at least one case")
    counts: dict[str, list[int]] = {fam.value: [0, 0, 0] for fam in Family}
    counts[HALL_CHANNEL] = [0, 0, 0]
    supports: dict[str, int] = {fam.value: 0 for fam in Family}
    supports[HALL_CHANNEL] = 0

    for pred in predictions:
        gold = golds.get(pred.case_id)
        if gold is None:
            raise MissingGoldError(f"no natural gold for case {pred.case_id!r}")
        predicted_families = pred.families()
        y_any = False
        yhat_any = False
        for fam in Family:
            y = gold.positive(fam)
            yhat = fam in predicted_families
            y_any = y_any or y
            yhat_any = yhat_any or yhat
            tp_fp_fn = counts[fam.value]
            if y and yhat:
                tp_fp_fn[0] += 1
            elif not y and yhat:
                tp_fp_fn[1] += 1
            elif y and not yhat:
                tp_fp_fn[2] += 1
            if y:
                supports[fam.value] += 1
        # Artifact-level channel: incorrect overall or any family positive.
        y_hall = gold.is_incorrect or y_any
        yhat_hall = yhat_any
        if y_hall and yhat_hall:
            counts[HALL_CHANNEL][0] += 1
        elif not y_hall and yhat_hall:
            counts[HALL_CHANNEL][1] += 1
        elif y_hall and not yhat_hall:
            counts[HALL_CHANNEL][2] += 1
        if y_hall:
            supports[HALL_CHANNEL] += 1

    values: dict[str, Fraction] = {"Halluc-F1": _f1(*counts[HALL_CHANNEL])}
    for fam in Family:
        values[f"{fam.value.capitalize()}-F1"] = _f1(*counts[fam.value])
    values["MajorCategoryMacro-F1"] = sum(
        (_f1(*counts[fam.value]) for fam in Family), start=Fraction(0)
    ) / 4
    pooled = [sum(counts[fam.value][i] for fam in Family) for i in range(3)]
    values["MajorCategoryMicro-F1"] = _f1(*pooled)

    report_supports = {"Halluc-F1": supports[HALL_CHANNEL]}
    for fam in Family:
        report_supports[f"{fam.value.capitalize()}-F1"] = supports[fam.value]
    return MetricReport(benchmark_kind="natural", values=values, supports=report_supports)


def objective_match(reported_a: float, reported_b: float, tolerance: float = 1e-6) -> bool:
    """Relative agreement of two reported objective values; the weakest
    behavioral signal, never a structural verdict."""
    if not (math.isfinite(reported_a) and math.isfinite(reported_b)):
        raise NonFiniteValueError("objective_match requires finite values")
    return abs(reported_a - reported_b) <= tolerance * max(1.0, abs(reported_b))
