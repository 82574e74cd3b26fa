import json

import pytest

from helpers import PARAM_CATALOG, tiny_catalog
from stratsynth.catalog import (
    BUILTIN_LOGICS, ParamSpec, ProbeSpec, TacticCatalog, TacticSpec, builtin_catalog, catalog_from_dict,
    catalog_to_dict, default_try_for, load_catalog, predicate_pool,
)
from stratsynth.errors import CatalogError
from stratsynth.lang import BoolProbe, Compare, parse
from stratsynth.rules import validate


def rules_of(text, catalog=PARAM_CATALOG):
    return [v.rule for v in validate(parse(text), catalog)]


# --- catalogs ---------------------------------------------------------------

@pytest.mark.parametrize("logic", BUILTIN_LOGICS)
def test_builtin_catalogs_load_and_round_trip(logic):
    cat = builtin_catalog(logic)
    assert cat.logic == logic
    assert cat.solvers
    assert catalog_from_dict(catalog_to_dict(cat)) == cat
    for t in cat.tactics:
        for p in t.params:
            assert len(p.candidates) >= 2


def test_solver_wrappers_flagged(qf_bv, qf_nia):
    assert {t.name for t in qf_bv.solvers} == {"smt", "sat", "qfbv"}
    assert qf_nia.is_solver("qfnia") and not qf_nia.is_solver("nla2bv")
    assert qf_bv.tactic("bit-blast").kind == "preprocessing"


def test_unknown_builtin_logic():
    with pytest.raises(CatalogError):
        builtin_catalog("QF_UF")


def test_catalog_needs_solver_and_unique_names():
    with pytest.raises(CatalogError):
        TacticCatalog("X", (TacticSpec("simplify"),))
    with pytest.raises(CatalogError):
        TacticCatalog("X", (TacticSpec("smt", True), TacticSpec("smt", True)))


def test_catalog_loader_normalizes_params(tmp_path):
    doc = {
        "logic": "X",
        "tactics": [
            {"name": "simplify", "params": [
                {"name": "som", "candidates": [False]},
                {"name": "flat", "candidates": [False, True]},
                {"name": "k", "candidates": [3]},
            ]},
            {"name": "my-user-tactic"},
            {"name": "smt", "solver_wrapper": True},
        ],
        "probes": [{"name": "size", "kind": "numeric", "thresholds": [10]}],
        "try_for_ms": [100, 200],
    }
    path = tmp_path / "cat.json"
    path.write_text(json.dumps(doc))
    cat = load_catalog(path)
    simp = cat.tactic("simplify")
    # booleans always become {true, false}; the single-candidate int param is dropped
    assert simp.params == (ParamSpec("som", (True, False)), ParamSpec("flat", (True, False)))
    assert "my-user-tactic" in cat.tactic_names
    assert cat.try_for_ms(10_000) == (100, 200)


def test_catalog_loader_rejects_mixed_candidates():
    doc = {"logic": "X", "tactics": [{"name": "smt", "solver_wrapper": True,
                                      "params": [{"name": "s", "candidates": [1, True]}]}]}
    with pytest.raises(CatalogError):
        catalog_from_dict(doc)
    with pytest.raises(CatalogError):
        catalog_from_dict({"tactics": []})


def test_probe_spec_validation():
    with pytest.raises(CatalogError):
        ProbeSpec("is-pb", "boolean", (1,))
    with pytest.raises(CatalogError):
        ProbeSpec("size", "numeric", ())


def test_default_try_for_fractions():
    assert default_try_for(10_000) == (625, 1250, 2500, 5000)
    assert builtin_catalog("QF_BV").try_for_ms(16_000) == (1000, 2000, 4000, 8000)


# --- predicate pool ---------------------------------------------------------

def test_predicate_pool_small_example():
    cat = tiny_catalog(probes=(ProbeSpec("is-pb", "boolean"), ProbeSpec("num-consts", "numeric", (100,))))
    assert predicate_pool(cat) == [BoolProbe("is-pb"), Compare(">", "num-consts", 100),
                                   Compare("<=", "num-consts", 100)]


def test_predicate_pool_empty():
    assert predicate_pool(tiny_catalog()) == []


def test_predicate_pool_count():
    probes = (ProbeSpec("a", "numeric", (1, 2, 3)), ProbeSpec("b", "numeric", (4, 5, 6)), ProbeSpec("c", "boolean"))
    pool = predicate_pool(tiny_catalog(probes=probes))
    # oracle: 1 boolean + 2 probes * 3 thresholds * 2 operators
    assert len(pool) == 1 + 2 * 3 * 2 == 13
    assert len(set(pool)) == len(pool)


# --- rules ------------------------------------------------------------------

def test_r1_solver_then_preprocessing():
    assert rules_of("(then smt simplify)") == ["R1"]


def test_r1_terminal_preprocessing():
    assert rules_of("simplify") == ["R1"]
    assert rules_of("(or-else smt simplify)") == ["R1"]


def test_r5_double_nla2bv():
    assert rules_of("(then simplify (then nla2bv (then nla2bv smt)))") == ["R5"]
    assert rules_of("(or-else (then nla2bv smt) (then nla2bv smt))") == []


def test_r6_bit_blast_needs_simplify():
    assert rules_of("(then simplify (then bit-blast sat))") == []
    assert rules_of("(then (using-params simplify :som true) (then bit-blast sat))") == []
    assert rules_of("(then solve-eqs (then bit-blast sat))") == ["R6"]
    assert rules_of("(then bit-blast sat)") == ["R6"]


def test_r2_nested_try_for():
    assert rules_of("(try-for (or-else (try-for smt 10) sat) 100)") == ["R2"]
    assert rules_of("(or-else (try-for smt 10) (try-for sat 10))") == []


def test_r3_depth_and_after_tactic():
    ok = "(if is-pb (if is-pb (if is-pb smt sat) sat) sat)"
    assert rules_of(ok) == []
    too_deep = "(if is-pb (if is-pb (if is-pb (if is-pb smt sat) sat) sat) sat)"
    assert rules_of(too_deep) == ["R3"]
    assert rules_of("(then simplify (if is-pb smt sat))") == ["R3"]


def test_unknown_names_reported():
    assert rules_of("(then nosuch smt)") == ["UNKNOWN"]
    assert rules_of("(if (> nosuch 3) smt sat)") == ["UNKNOWN"]
    assert rules_of("(if size smt sat)") == ["UNKNOWN"]  # numeric probe used as boolean


def test_multiple_rules_sorted():
    got = rules_of("(then smt (then bit-blast simplify))")
    assert got == sorted(set(got)) and {"R1", "R6"} <= set(got)
