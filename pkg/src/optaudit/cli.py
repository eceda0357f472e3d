"""Command-line surface.

Commands: audit, inject, bench run, bench score, validate, taxonomy list.
Exit codes: 0 ok, 1 input/schema error, 2 backend error, 3 internal.
Detection itself is the product: finding hallucinations still exits 0.
"""
from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from .artifact import AuditTuple, canonical_json, parse_case, serialize_case
from .config import AppConfig, load_config
from .errors import AuditError, BackendError, BenchmarkKindError, SchemaError
from .evaluator import NaturalGold, Prediction, score_clean, score_injected, score_natural
from .gateway import make_backend
from .injector import RECIPES, build_benchmark
from .pipeline import DETECTOR_ROUTED, DETECTOR_SINGLE, audit_case, run_benchmark
from .report import analyst_notes, render_markdown
from .seeds import load_bundled_seeds
from .taxonomy import Family, LabelPath, TaxonomyRegistry, load_registry

EXIT_INPUT = 1
EXIT_BACKEND = 2
EXIT_INTERNAL = 3


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (BackendError,) as exc:
            click.echo(f"backend error: {exc}", err=True)
            sys.exit(EXIT_BACKEND)
        except (SchemaError, BenchmarkKindError, AuditError, FileNotFoundError, json.JSONDecodeError, ValueError) as exc:
            click.echo(f"input error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        except Exception as exc:  # noqa: BLE001 - last-resort mapping to the exit contract
            click.echo(f"internal error: {exc}", err=True)
            sys.exit(EXIT_INTERNAL)

    return wrapper


def _build_config(config_path: str | None, backend: str | None, fixture_dir: str | None = None) -> AppConfig:
    overrides: dict = {}
    if backend:
        overrides.setdefault("gateway", {})["backend"] = backend
    if fixture_dir:
        overrides.setdefault("gateway", {})["fixture_dir"] = fixture_dir
    return load_config(config_path, overrides)


def _read_case_file(path: str) -> AuditTuple:
    with open(path, encoding="utf-8") as fh:
        return parse_case(json.load(fh))


def _read_case_lines(path: str) -> list[AuditTuple]:
    cases = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                cases.append(parse_case(json.loads(line)))
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{path}:{line_no}: not valid JSON ({exc})") from exc
    if not cases:
        raise SchemaError(f"{path}: no cases found")
    return cases


def _read_jsonl(path: str) -> list[dict]:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                docs.append(json.loads(line))
    return docs


@click.group()
def main() -> None:
    """Structural audit tooling for optimization-modeling artifacts."""


@main.command()
@click.argument("case_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None, help="JSON config file.")
@click.option("--backend", type=click.Choice(["heuristic", "replay", "remote"]), default=None)
@click.option("--fixture-dir", type=click.Path(), default=None, help="Replay fixture directory.")
@click.option("--detector", type=click.Choice([DETECTOR_ROUTED, DETECTOR_SINGLE]), default=DETECTOR_ROUTED)
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=".", help="Output directory.")
@_guarded
def audit(case_file: str, config_path: str | None, backend: str | None, fixture_dir: str | None, detector: str, out_dir: str) -> None:
    """Audit one case and write a prediction file plus a markdown report."""
    config = _build_config(config_path, backend, fixture_dir)
    registry = load_registry()
    case = _read_case_file(case_file)
    gateway = make_backend(config.gateway)
    result = audit_case(case, gateway, registry, config, detector)
    notes = analyst_notes(result, gateway, config)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    pred_path = out / f"{case.case_id}.pred.json"
    pred_path.write_text(canonical_json(result.prediction_doc()) + "\n", encoding="utf-8")
    report_path = out / f"{case.case_id}.report.md"
    report_path.write_text(render_markdown(result, registry, gateway.kind, notes), encoding="utf-8")
    click.echo(f"wrote {pred_path} and {report_path}")
    if result.diagnosis.abstained:
        click.echo("abstained: no supported hallucination")
    else:
        top = result.diagnosis.findings[0]
        click.echo(f"top finding: {top.label.code} at {top.element}")


@main.command()
@click.argument("seeds_file", type=click.Path(exists=True, dir_okay=False), required=False)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@click.option("--recipes", "recipe_filter", default=None, help="Comma-separated codes or family prefix (e.g. 4 or 4.1.1,3.2.3).")
@click.option("--per-type", "per_type", type=int, default=30, show_default=True)
@click.option("--seed", "rng_seed", type=int, default=0, show_default=True)
@_guarded
def inject(seeds_file: str | None, out_path: str, recipe_filter: str | None, per_type: int, rng_seed: int) -> None:
    """Build a gold-labeled injected benchmark from clean seeds.

    With no SEEDS_FILE the bundled seed fixtures are used.
    """
    if per_type < 1:
        raise SchemaError("--per-type must be at least 1")
    registry = load_registry()
    seeds = _read_case_lines(seeds_file) if seeds_file else load_bundled_seeds()

    recipes = list(RECIPES)
    if recipe_filter:
        wanted = [token.strip() for token in recipe_filter.split(",") if token.strip()]
        by_family_digit = {"objective": "1", "variable": "2", "constraint": "3", "implementation": "4"}
        selected = []
        for recipe in RECIPES:
            for token in wanted:
                token_digit = by_family_digit.get(token.lower(), token)
                if recipe.code == token or recipe.code.startswith(token_digit + "."):
                    selected.append(recipe)
                    break
        if not selected:
            raise SchemaError(f"--recipes matched nothing: {recipe_filter!r}")
        recipes = selected

    cases, coverage = build_benchmark(seeds, recipes, per_type, rng_seed, registry)
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for injected in cases:
            doc = serialize_case(injected.case)
            doc["gold"] = {
                "family": injected.gold.family.value,
                "subcategory": injected.gold.subcategory,
                "specific": injected.gold.specific,
                "numeric_code": injected.gold.code,
                "provenance": injected.provenance,
            }
            fh.write(canonical_json(doc) + "\n")

    click.echo(f"wrote {len(cases)} cases to {path}")
    click.echo(f"{'code':<8}{'recipe':<34}{'sites':>6}{'built':>6}  status")
    for row in coverage:
        click.echo(f"{row.code:<8}{row.name:<34}{row.applicable_sites:>6}{row.built:>6}  {row.status}")


@main.group()
def bench() -> None:
    """Benchmark runs and scoring."""


@bench.command("run")
@click.argument("cases_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--backend", type=click.Choice(["heuristic", "replay", "remote"]), default=None)
@click.option("--fixture-dir", type=click.Path(), default=None)
@click.option("--detector", type=click.Choice([DETECTOR_ROUTED, DETECTOR_SINGLE]), default=DETECTOR_ROUTED)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), required=True)
@_guarded
def bench_run(cases_file: str, config_path: str | None, backend: str | None, fixture_dir: str | None, detector: str, out_path: str) -> None:
    """Run a detector over a case set; write predictions and a manifest."""
    config = _build_config(config_path, backend, fixture_dir)
    registry = load_registry()
    cases = _read_case_lines(cases_file)
    gateway = make_backend(config.gateway)
    results, manifest = run_benchmark(cases, gateway, registry, config, detector)

    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        for result in results:
            fh.write(canonical_json(result.prediction_doc()) + "\n")
    manifest_path = path.with_suffix(path.suffix + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    degraded = sum(1 for r in results if r.degraded)
    click.echo(f"wrote {len(results)} predictions to {path} (manifest: {manifest_path})")
    if degraded:
        click.echo(f"{degraded} case(s) degraded to abstention on backend failures", err=True)


def _parse_prediction_line(doc: dict, registry: TaxonomyRegistry) -> Prediction:
    findings = []
    for f in doc.get("findings", []):
        if "code" in f:
            label = registry.by_code(str(f["code"]))
        else:
            label = registry.resolve(f.get("family", ""), f.get("subcategory", ""), f.get("specific", ""))
        findings.append((label, float(f.get("support", 0.0))))
    return Prediction(case_id=str(doc["case_id"]), findings=tuple(findings))


def _parse_injected_gold(docs: list[dict], registry: TaxonomyRegistry) -> dict[str, LabelPath]:
    golds: dict[str, LabelPath] = {}
    for doc in docs:
        gold = doc.get("gold")
        if not isinstance(gold, dict):
            raise BenchmarkKindError("gold file has no per-case 'gold' blocks; not an injected benchmark")
        code = gold.get("numeric_code", gold.get("code"))
        if code is None:
            raise BenchmarkKindError("gold block lacks a numeric_code; not an injected benchmark")
        golds[str(doc["case_id"])] = registry.by_code(str(code))
    return golds


def _parse_natural_gold(docs: list[dict]) -> dict[str, NaturalGold]:
    golds: dict[str, NaturalGold] = {}
    for doc in docs:
        if "is_incorrect" not in doc or "categories" not in doc:
            raise BenchmarkKindError("gold file lacks is_incorrect/categories fields; not a natural benchmark")
        categories = doc["categories"]
        golds[str(doc["case_id"])] = NaturalGold(
            case_id=str(doc["case_id"]),
            is_incorrect=bool(doc["is_incorrect"]),
            category_positives=tuple((fam, bool(categories.get(fam.value, False))) for fam in Family),
        )
    return golds


@bench.command("score")
@click.argument("prediction_file", type=click.Path(exists=True, dir_okay=False))
@click.argument("gold_file", type=click.Path(exists=True, dir_okay=False))
@click.option("--kind", type=click.Choice(["clean", "injected", "natural"]), required=True)
@click.option("--out", "out_path", type=click.Path(dir_okay=False), default=None, help="Also write the report as JSON.")
@_guarded
def bench_score(prediction_file: str, gold_file: str, kind: str, out_path: str | None) -> None:
    """Score predictions against golds with the benchmark's formulas."""
    registry = load_registry()
    predictions = [_parse_prediction_line(doc, registry) for doc in _read_jsonl(prediction_file)]
    gold_docs = _read_jsonl(gold_file)

    if kind == "clean":
        known = {str(doc.get("case_id")) for doc in gold_docs}
        unknown = [p.case_id for p in predictions if p.case_id not in known]
        if unknown:
            raise BenchmarkKindError(f"predictions reference cases absent from the clean case set: {unknown[:3]}")
        report = score_clean(predictions)
    elif kind == "injected":
        report = score_injected(predictions, _parse_injected_gold(gold_docs, registry))
    else:
        report = score_natural(predictions, _parse_natural_gold(gold_docs))

    click.echo(report.table())
    if out_path:
        Path(out_path).write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        click.echo(f"wrote {out_path}")


@main.command()
@click.argument("cases_file", type=click.Path(exists=True, dir_okay=False))
@_guarded
def validate(cases_file: str) -> None:
    """Parse every case in a set and report problems."""
    failures = 0
    with open(cases_file, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                case = parse_case(json.loads(line))
                click.echo(f"line {line_no}: ok ({case.case_id})")
            except (AuditError, json.JSONDecodeError) as exc:
                failures += 1
                click.echo(f"line {line_no}: ERROR {exc}")
    if failures:
        click.echo(f"{failures} invalid case(s)", err=True)
        sys.exit(EXIT_INPUT)


@main.group()
def taxonomy() -> None:
    """Taxonomy registry utilities."""


@taxonomy.command("list")
@click.option("--family", "family_name", type=click.Choice([f.value for f in Family]), default=None)
@_guarded
def taxonomy_list(family_name: str | None) -> None:
    """Print the label inventory, optionally one family."""
    registry = load_registry()
    families = [Family(family_name)] if family_name else list(Family)
    for family in families:
        node = registry.family_node(family)
        click.echo(f"{family.value} ({node.name})")
        for sub in node.subcategories:
            click.echo(f"  {sub.name}")
            for t in sub.types:
                click.echo(f"    {t.code}  {t.name}")


if __name__ == "__main__":
    main()
