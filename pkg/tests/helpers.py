"""Shared generators and small oracles for the test suite.

Everything here is written independently of the package internals it is used
to check: random ASTs are built straight from the catalog, and the toy MDP
optimum comes from brute-force enumeration.
"""
from __future__ import annotations

import hashlib
import itertools
import random

from hypothesis import strategies as st

from stratsynth.catalog import ParamSpec, ProbeSpec, TacticCatalog, TacticSpec
from stratsynth.lang import BoolProbe, Compare, If, Leaf, OrElse, Then, TryFor, UsingParams


def tiny_catalog(n_pre=2, n_solvers=4, probes=()) -> TacticCatalog:
    """Parameter-free catalog with tactics p0.. and solvers s0.."""
    tactics = [TacticSpec(f"p{i}") for i in range(n_pre)] + [TacticSpec(f"s{i}", True) for i in range(n_solvers)]
    return TacticCatalog("TOY", tuple(tactics), tuple(probes))


def hashed_reward(key: str, salt: str = "") -> float:
    d = hashlib.sha256(f"{salt}|{key}".encode()).digest()
    return int.from_bytes(d[:8], "big") / 2.0 ** 64


def enumerate_linear(catalog: TacticCatalog, max_len: int) -> list[tuple[str, ...]]:
    """All tactic-name sequences pre* solver with total length <= max_len."""
    pre = [t.name for t in catalog.tactics if not t.solver_wrapper]
    sol = [t.name for t in catalog.tactics if t.solver_wrapper]
    out = []
    for n in range(max_len):
        for heads in itertools.product(pre, repeat=n):
            for s in sol:
                out.append(heads + (s,))
    return out


def seq_render(seq: tuple[str, ...]) -> str:
    text = seq[-1]
    for t in reversed(seq[:-1]):
        text = f"(then {t} {text})"
    return text


# ---------------------------------------------------------------------------
# random strategy ASTs straight from a catalog (no MDP involved)

def _random_app(rng: random.Random, tactic_spec: TacticSpec):
    if tactic_spec.params and rng.random() < 0.5:
        chosen = rng.sample(list(tactic_spec.params), rng.randint(1, len(tactic_spec.params)))
        return UsingParams(Leaf(tactic_spec.name), tuple((p.name, rng.choice(p.candidates)) for p in chosen))
    return Leaf(tactic_spec.name)


def _random_pred(rng: random.Random, catalog: TacticCatalog):
    p = rng.choice(catalog.probes)
    if p.kind == "boolean":
        return BoolProbe(p.name)
    return Compare(rng.choice((">", "<", ">=", "<=", "=", "!=")), p.name, rng.choice(p.thresholds + (0, -3, 12345)))


def random_ast(rng: random.Random, catalog: TacticCatalog, depth: int = 0, max_depth: int = 5):
    """A syntactically valid strategy mixing every combinator."""
    solvers = [t for t in catalog.tactics if t.solver_wrapper]
    pres = [t for t in catalog.tactics if not t.solver_wrapper]
    if depth >= max_depth:
        return _random_app(rng, rng.choice(solvers))
    kinds = ["leaf", "then", "or-else", "try-for"] + (["if"] if catalog.probes else [])
    kind = rng.choice(kinds)
    if kind == "leaf":
        return _random_app(rng, rng.choice(solvers))
    if kind == "then":
        return Then(_random_app(rng, rng.choice(pres)), random_ast(rng, catalog, depth + 1, max_depth))
    if kind == "or-else":
        return OrElse(random_ast(rng, catalog, depth + 1, max_depth), random_ast(rng, catalog, depth + 1, max_depth))
    if kind == "try-for":
        return TryFor(random_ast(rng, catalog, depth + 1, max_depth), rng.randint(1, 60_000))
    return If(_random_pred(rng, catalog), random_ast(rng, catalog, depth + 1, max_depth),
              random_ast(rng, catalog, depth + 1, max_depth))


@st.composite
def asts(draw, catalog: TacticCatalog, max_depth: int = 4):
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return random_ast(random.Random(seed), catalog, 0, draw(st.integers(0, max_depth)))


def random_combination(rng: random.Random, portfolio, predicates, try_for, depth=0, max_depth=3, remaining=None):
    """Random stage-2 style strategy over ``portfolio`` (not via the MDP).

    With ``remaining`` set, try-for budgets along any path stay strictly below it,
    as the combine stage requires.
    """
    r = rng.random()
    budgets = [c for c in try_for if remaining is None or c < remaining]
    if depth >= max_depth or r < 0.35 or (r >= 0.65 and not budgets):
        return rng.choice(portfolio)
    if r < 0.65:
        return If(rng.choice(predicates),
                  random_combination(rng, portfolio, predicates, try_for, depth + 1, max_depth, remaining),
                  random_combination(rng, portfolio, predicates, try_for, depth + 1, max_depth, remaining))
    c = rng.choice(budgets)
    rest = None if remaining is None else remaining - c
    return OrElse(TryFor(rng.choice(portfolio), c),
                  random_combination(rng, portfolio, predicates, try_for, depth + 1, max_depth, rest))


PROBES = (
    ProbeSpec("is-pb", "boolean"),
    ProbeSpec("num-consts", "numeric", (10, 100)),
    ProbeSpec("size", "numeric", (50, 500, 5000)),
)

PARAM_CATALOG = TacticCatalog(
    "TEST",
    (
        TacticSpec("simplify", False, (ParamSpec("som", (True, False)), ParamSpec("flat", (True, False)))),
        TacticSpec("bit-blast"),
        TacticSpec("nla2bv", False, (ParamSpec("nla2bv_max_bv_size", (4, 8, 16)),)),
        TacticSpec("solve-eqs"),
        TacticSpec("smt", True, (ParamSpec("random_seed", (0, 5, 10)),)),
        TacticSpec("sat", True),
    ),
    PROBES,
)
