import pytest
from hypothesis import given, settings, strategies as st

from helpers import PARAM_CATALOG, asts
from stratsynth.errors import StrategySyntaxError, UnknownSymbol
from stratsynth.lang import (
    BoolProbe, Compare, If, Leaf, OrElse, Then, TryFor, UsingParams, canonical_key, is_linear, linear,
    parse, parse_predicate, render, tactic_sequence, using,
)


def test_render_branch_example():
    ast = If(BoolProbe("is-pb"), Then(Leaf("propagate-values"), Leaf("sat")), Leaf("smt"))
    assert render(ast) == "(if is-pb (then propagate-values sat) smt)"


def test_render_single_leaf():
    assert render(Leaf("smt")) == "smt"


def test_render_using_params_inside_then():
    ast = Then(UsingParams(Leaf("simplify"), (("som", True),)), Leaf("smt"))
    assert render(ast) == "(then (using-params simplify :som true) smt)"


def test_parse_or_else_try_for():
    assert parse("(or-else (try-for smt 4000) smt)") == OrElse(TryFor(Leaf("smt"), 4000), Leaf("smt"))


def test_parse_numeric_predicate():
    got = parse("(if (> num-consts 100) smt sat)")
    assert got == If(Compare(">", "num-consts", 100), Leaf("smt"), Leaf("sat"))


@pytest.mark.parametrize("text", ["(then smt", "", "(then)", "(try-for smt -5)", "(try-for smt 0)",
                                  "(using-params smt)", "(using-params smt :seed)", "smt smt", "(bogus smt)",
                                  "(then (or-else smt sat) smt)", "(if (> num-consts) smt sat)"])
def test_parse_rejects_malformed(text):
    with pytest.raises(StrategySyntaxError) as err:
        parse(text)
    assert err.value.position >= 0
    assert err.value.expected


def test_syntax_error_position_points_at_problem():
    with pytest.raises(StrategySyntaxError) as err:
        parse("(then smt")
    assert err.value.position == len("(then smt")


def test_parse_unknown_symbols_against_catalog():
    with pytest.raises(UnknownSymbol) as err:
        parse("(then frobnicate smt)", PARAM_CATALOG)
    assert err.value.name == "frobnicate"
    with pytest.raises(UnknownSymbol):
        parse("(using-params smt :nope 3)", PARAM_CATALOG)
    with pytest.raises(UnknownSymbol):
        parse("(if is-weird smt sat)", PARAM_CATALOG)
    # without a catalog any identifier is accepted verbatim
    assert parse("(then frobnicate smt)") == Then(Leaf("frobnicate"), Leaf("smt"))


def test_nary_then_folds_right():
    assert parse("(then a b c smt)") == parse("(then a (then b (then c smt)))")


def test_whitespace_insensitive():
    assert parse("  ( then\n simplify\t( using-params smt :random_seed 5 ) ) ") == Then(
        Leaf("simplify"), UsingParams(Leaf("smt"), (("random_seed", 5),))
    )


def test_not_equal_round_trip():
    ast = If(Compare("!=", "size", 3), Leaf("smt"), Leaf("sat"))
    assert render(ast) == "(if (not (= size 3)) smt sat)"
    assert parse(render(ast)) == ast
    assert parse_predicate("(<= size 7)") == Compare("<=", "size", 7)


def test_canonical_key_sorts_settings():
    a = UsingParams(Leaf("simplify"), (("som", True), ("flat", False)))
    b = UsingParams(Leaf("simplify"), (("flat", False), ("som", True)))
    assert canonical_key(a) == canonical_key(b)
    assert render(a) != render(b)


def test_canonical_key_whitespace_and_distinct():
    assert canonical_key(parse("(then  simplify   smt)")) == canonical_key(parse("(then simplify smt)"))
    assert canonical_key(Leaf("smt")) != canonical_key(Leaf("sat"))


def test_linear_helpers():
    s = linear("simplify", using("bit-blast"), using("smt", random_seed=5))
    assert is_linear(s)
    assert [a.tactic for a in tactic_sequence(s)] == ["simplify", "bit-blast", "smt"]
    assert not is_linear(OrElse(Leaf("smt"), Leaf("sat")))


@settings(max_examples=300, deadline=None)
@given(asts(PARAM_CATALOG))
def test_round_trip_property(ast):
    assert parse(render(ast)) == ast
    assert parse(render(ast), PARAM_CATALOG) == ast


@settings(max_examples=200, deadline=None)
@given(asts(PARAM_CATALOG), st.randoms(use_true_random=False))
def test_key_is_invariant_under_setting_order(ast, rnd):
    def shuffle(node):
        if isinstance(node, UsingParams):
            items = list(node.settings)
            rnd.shuffle(items)
            return UsingParams(node.child, tuple(items))
        if isinstance(node, Then):
            return Then(shuffle(node.head), shuffle(node.tail))
        if isinstance(node, OrElse):
            return OrElse(shuffle(node.first), shuffle(node.second))
        if isinstance(node, TryFor):
            return TryFor(shuffle(node.child), node.millis)
        if isinstance(node, If):
            return If(node.pred, shuffle(node.then_branch), shuffle(node.else_branch))
        return node

    assert canonical_key(shuffle(ast)) == canonical_key(ast)
    assert canonical_key(parse(canonical_key(ast))) == canonical_key(ast)
