import pytest

from optaudit.artifact import case_bytes, parse_case, serialize_case, structural_diff
from optaudit.errors import NotApplicableError
from optaudit.injector import (
    RECIPES,
    RECIPES_BY_CODE,
    build_benchmark,
    inject,
    inject_at,
    invert_injection,
)

from conftest import minimal_case_doc


def test_recipe_inventory_spans_all_families():
    assert len(RECIPES) == 17
    prefixes = {code.split(".")[0] for code in RECIPES_BY_CODE}
    assert prefixes == {"1", "2", "3", "4"}


def test_applicable_equality_sites(seed_by_id):
    # diet_blend has one equality (weight) and one inequality (protein)
    sites = RECIPES_BY_CODE["3.4.1"].applicable(seed_by_id["diet_blend"])
    assert sites == [("model", "constraint", "weight")]


def test_applicable_objective_always_one_site(seeds):
    for case in seeds:
        assert len(RECIPES_BY_CODE["1.1.1"].applicable(case)) == 1


def test_applicable_discrete_relaxation_needs_discrete_vars(seed_by_id):
    assert RECIPES_BY_CODE["2.2.1"].applicable(seed_by_id["diet_blend"]) == []
    assert len(RECIPES_BY_CODE["2.2.1"].applicable(seed_by_id["knapsack_small"])) == 3


def test_inject_flips_objective_sense(seed_by_id, registry):
    seed = seed_by_id["diet_blend"]
    injected = inject(RECIPES_BY_CODE["1.1.1"], seed, 0, registry)
    assert injected.case.model.objective.sense == "maximize"
    assert injected.gold.code == "1.1.1"
    assert injected.case.case_id != seed.case_id
    assert injected.provenance["seed_case_id"] == "diet_blend"


def test_inject_relaxes_equality(seed_by_id, registry):
    injected = inject_at(
        RECIPES_BY_CODE["3.4.1"], seed_by_id["diet_blend"], ("model", "constraint", "weight"), 0, registry
    )
    assert injected.case.model.constraint("weight").relation == "<="
    assert injected.gold.code == "3.4.1"


def test_inject_not_applicable(seed_by_id, registry):
    with pytest.raises(NotApplicableError):
        inject(RECIPES_BY_CODE["2.2.1"], seed_by_id["diet_blend"], 0, registry)


def test_round_trip_every_recipe_and_site(seeds, registry):
    checked = 0
    for seed in seeds:
        seed_bytes = case_bytes(seed)
        for recipe in RECIPES:
            for site in recipe.applicable(seed):
                injected = inject_at(recipe, seed, site, 9, registry)
                restored = invert_injection(injected)
                assert case_bytes(restored) == seed_bytes, (recipe.code, seed.case_id, site)
                checked += 1
    assert checked > 100


def test_single_site_diff_property(seeds, registry):
    for seed in seeds:
        for recipe in RECIPES:
            for site in recipe.applicable(seed):
                injected = inject_at(recipe, seed, site, 3, registry)
                diff = structural_diff(seed, injected.case)
                assert len(diff) == 1, (recipe.code, seed.case_id, site, diff)


def test_validity_preserved(seeds, registry):
    for seed in seeds:
        for recipe in RECIPES:
            for site in recipe.applicable(seed):
                injected = inject_at(recipe, seed, site, 4, registry)
                reparsed = parse_case(serialize_case(injected.case))
                assert reparsed == injected.case


def test_gold_schema_never_edited(seeds, registry):
    for seed in seeds:
        for recipe in RECIPES:
            for site in recipe.applicable(seed):
                injected = inject_at(recipe, seed, site, 5, registry)
                assert injected.case.problem.schema == seed.problem.schema


def test_provenance_is_json_serializable(seed_by_id, registry):
    import json

    injected = inject(RECIPES_BY_CODE["3.2.3"], seed_by_id["diet_blend"], 0, registry)
    rebuilt = json.loads(json.dumps(injected.provenance))
    assert rebuilt["recipe"] == "3.2.3"
    assert rebuilt["rng_seed"] == 0


def test_seeded_site_choice_is_stable(seed_by_id, registry):
    seed = seed_by_id["knapsack_small"]
    first = inject(RECIPES_BY_CODE["2.2.1"], seed, 42, registry)
    second = inject(RECIPES_BY_CODE["2.2.1"], seed, 42, registry)
    assert first.case == second.case
    other = inject(RECIPES_BY_CODE["2.2.1"], seed, 43, registry)
    assert other.provenance["rng_seed"] != first.provenance["rng_seed"]


def test_build_benchmark_deterministic(seeds, registry):
    a_cases, a_cov = build_benchmark(seeds, list(RECIPES), 10, 7, registry)
    b_cases, b_cov = build_benchmark(seeds, list(RECIPES), 10, 7, registry)
    assert [case_bytes(c.case) for c in a_cases] == [case_bytes(c.case) for c in b_cases]
    assert a_cov == b_cov
    c_cases, _ = build_benchmark(seeds, list(RECIPES), 10, 8, registry)
    assert [c.case.case_id for c in a_cases] != [c.case.case_id for c in c_cases] or a_cases != c_cases


def test_build_benchmark_statuses(seeds, registry):
    cases, coverage = build_benchmark(seeds, list(RECIPES), 30, 0, registry)
    by_code = {row.code: row for row in coverage}
    # 3.7.2 has exactly two prepared sites in the corpus: partial
    assert by_code["3.7.2"].built == 2
    assert by_code["3.7.2"].status == "partial"
    # 1.1.1 has 12 sites, below the 30 target: partial too
    assert by_code["1.1.1"].status == "partial"
    small_cases, small_cov = build_benchmark(seeds, [RECIPES_BY_CODE["1.1.1"]], 5, 0, registry)
    assert len(small_cases) == 5
    assert small_cov[0].status == "full"


def test_build_benchmark_shortage(registry):
    case = parse_case(minimal_case_doc())
    _, coverage = build_benchmark([case], [RECIPES_BY_CODE["2.2.1"]], 30, 0, registry)
    assert coverage[0].status == "shortage"
    assert coverage[0].built == 0


def test_build_benchmark_unique_case_ids(seeds, registry):
    cases, _ = build_benchmark(seeds, list(RECIPES), 30, 0, registry)
    ids = [c.case.case_id for c in cases]
    assert len(set(ids)) == len(ids)


def test_build_benchmark_stratified_sampling(seeds, registry):
    # strata from the seed_family tag should all contribute when a recipe
    # caps below availability
    cases, _ = build_benchmark(seeds, [RECIPES_BY_CODE["4.2.1"]], 6, 1, registry)
    seed_ids = {c.provenance["seed_case_id"] for c in cases}
    by_family = {s.case_id: s.meta("seed_family") for s in seeds}
    families = {by_family[sid] for sid in seed_ids}
    assert families == {"alloc", "logistics", "production"}


def test_per_type_target_validation(seeds, registry):
    with pytest.raises(ValueError):
        build_benchmark(seeds, list(RECIPES), 0, 0, registry)


def test_coverage_counts_match_applicability(seeds, registry):
    # with a target far above availability, built == applicable sites
    cases, coverage = build_benchmark(seeds, list(RECIPES), 100, 2, registry)
    for row in coverage:
        expected = sum(len(RECIPES_BY_CODE[row.code].applicable(s)) for s in seeds)
        assert row.applicable_sites == expected
        assert row.built == expected
    assert len(cases) == sum(row.built for row in coverage)


def test_all_seeds_applicable_yields_partial_below_target(seeds, registry):
    # every seed offers exactly one sense-flip site; 12 < 30 target -> partial
    cases, coverage = build_benchmark(seeds, [RECIPES_BY_CODE["1.1.1"]], 30, 0, registry)
    assert len(cases) == len(seeds)
    assert coverage[0].built == len(seeds)
    assert coverage[0].status == "partial"
