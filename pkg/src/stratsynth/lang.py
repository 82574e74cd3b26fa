"""Strategy abstract syntax, rendering and parsing.

Surface syntax follows the solver's strategy language::

    (if is-pb (then propagate-values sat) smt)
    (then (using-params simplify :som true) smt)
    (or-else (try-for smt 4000) sat)
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

from stratsynth.errors import StrategySyntaxError, UnknownSymbol

if TYPE_CHECKING:
    from stratsynth.catalog import TacticCatalog

ParamValue = Union[bool, int]
Settings = tuple[tuple[str, ParamValue], ...]

OPERATORS = (">", "<", ">=", "<=", "=", "!=")


@dataclass(frozen=True)
class BoolProbe:
    name: str


@dataclass(frozen=True)
class Compare:
    op: str
    probe: str
    constant: int

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise ValueError(f"unknown comparison operator {self.op!r}")


Predicate = Union[BoolProbe, Compare]


@dataclass(frozen=True)
class Leaf:
    tactic: str


@dataclass(frozen=True)
class UsingParams:
    child: Leaf
    settings: Settings

    @property
    def tactic(self) -> str:
        return self.child.tactic


@dataclass(frozen=True)
class Then:
    head: Union[Leaf, UsingParams]
    tail: "Strategy"


@dataclass(frozen=True)
class OrElse:
    first: "Strategy"
    second: "Strategy"


@dataclass(frozen=True)
class TryFor:
    child: "Strategy"
    millis: int


@dataclass(frozen=True)
class If:
    pred: Predicate
    then_branch: "Strategy"
    else_branch: "Strategy"


Strategy = Union[Leaf, UsingParams, Then, OrElse, TryFor, If]
TacticApp = Union[Leaf, UsingParams]


def using(tactic: str, **settings: ParamValue) -> TacticApp:
    """Build a tactic application; keyword names use ``_`` as in the solver."""
    if not settings:
        return Leaf(tactic)
    return UsingParams(Leaf(tactic), tuple(settings.items()))


def linear(*apps: Union[str, TacticApp]) -> Strategy:
    """Right-nested ``then`` chain; the last element is the terminal tactic."""
    nodes = [Leaf(a) if isinstance(a, str) else a for a in apps]
    out: Strategy = nodes[-1]
    for head in reversed(nodes[:-1]):
        out = Then(head, out)
    return out


def is_linear(ast: Strategy) -> bool:
    while isinstance(ast, Then):
        ast = ast.tail
    return isinstance(ast, (Leaf, UsingParams))


def tactic_sequence(ast: Strategy) -> list[TacticApp]:
    """Tactic applications of a linear strategy, in execution order."""
    out = []
    while isinstance(ast, Then):
        out.append(ast.head)
        ast = ast.tail
    if not isinstance(ast, (Leaf, UsingParams)):
        raise ValueError("strategy is not linear")
    out.append(ast)
    return out


# -- rendering ---------------------------------------------------------------

def _value(v: ParamValue) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def render_predicate(pred: Predicate) -> str:
    if isinstance(pred, BoolProbe):
        return pred.name
    if pred.op == "!=":
        return f"(not (= {pred.probe} {pred.constant}))"
    return f"({pred.op} {pred.probe} {pred.constant})"


def _render(ast: Strategy, sort_settings: bool) -> str:
    if isinstance(ast, Leaf):
        return ast.tactic
    if isinstance(ast, UsingParams):
        settings = sorted(ast.settings, key=lambda kv: kv[0]) if sort_settings else ast.settings
        body = " ".join(f":{k} {_value(v)}" for k, v in settings)
        return f"(using-params {ast.child.tactic} {body})"
    if isinstance(ast, Then):
        return f"(then {_render(ast.head, sort_settings)} {_render(ast.tail, sort_settings)})"
    if isinstance(ast, OrElse):
        return f"(or-else {_render(ast.first, sort_settings)} {_render(ast.second, sort_settings)})"
    if isinstance(ast, TryFor):
        return f"(try-for {_render(ast.child, sort_settings)} {ast.millis})"
    if isinstance(ast, If):
        return (f"(if {render_predicate(ast.pred)} {_render(ast.then_branch, sort_settings)} "
                f"{_render(ast.else_branch, sort_settings)})")
    raise TypeError(f"not a strategy node: {ast!r}")


def render(ast: Strategy) -> str:
    return _render(ast, sort_settings=False)


def canonical_key(ast: Strategy) -> str:
    """Rendering with parameter settings sorted by name; used as cache key."""
    return _render(ast, sort_settings=True)


# -- parsing -----------------------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([^\s()]+))")
_INT = re.compile(r"-?\d+\Z")


class _Parser:
    def __init__(self, text: str, catalog: "TacticCatalog | None"):
        self.text = text
        self.catalog = catalog
        self.tokens: list[tuple[str, int]] = []
        pos = 0
        while True:
            m = _TOKEN.match(text, pos)
            if not m or m.end() == pos:
                break
            self.tokens.append((m.group(m.lastindex), m.start(m.lastindex)))
            pos = m.end()
        if text[pos:].strip():
            raise StrategySyntaxError(pos, "token", text)
        self.i = 0

    def error(self, expected: str):
        pos = self.tokens[self.i][1] if self.i < len(self.tokens) else len(self.text)
        raise StrategySyntaxError(pos, expected, self.text)

    def peek(self) -> str | None:
        return self.tokens[self.i][0] if self.i < len(self.tokens) else None

    def take(self) -> str:
        if self.i >= len(self.tokens):
            self.error("more input")
        tok = self.tokens[self.i][0]
        self.i += 1
        return tok

    def expect(self, tok: str):
        if self.peek() != tok:
            self.error(repr(tok))
        self.i += 1

    def atom(self, expected: str) -> str:
        tok = self.peek()
        if tok is None or tok in "()":
            self.error(expected)
        self.i += 1
        return tok

    def integer(self) -> int:
        tok = self.peek()
        if tok is None or not _INT.match(tok):
            self.error("integer constant")
        self.i += 1
        return int(tok)

    def tactic_name(self) -> str:
        name = self.atom("tactic name")
        if self.catalog is not None and name not in self.catalog.tactic_names:
            raise UnknownSymbol(name, "tactic")
        return name

    def strategy(self) -> Strategy:
        if self.peek() != "(":
            return Leaf(self.tactic_name())
        self.i += 1
        head = self.atom("combinator")
        if head == "then":
            parts = [self.strategy()]
            while self.peek() != ")":
                parts.append(self.strategy())
            if len(parts) < 2:
                self.error("at least two strategies in then")
            self.i += 1
            for p in parts[:-1]:
                if not isinstance(p, (Leaf, UsingParams)):
                    raise StrategySyntaxError(self.tokens[self.i - 1][1], "tactic application in then", self.text)
            out: Strategy = parts[-1]
            for p in reversed(parts[:-1]):
                out = Then(p, out)
            return out
        if head == "using-params":
            child = self.strategy()
            if not isinstance(child, Leaf):
                self.error("tactic under using-params")
            settings = []
            while self.peek() != ")":
                key = self.atom("parameter keyword")
                if not key.startswith(":") or len(key) < 2:
                    self.i -= 1
                    self.error("parameter keyword")
                name = key[1:]
                if self.catalog is not None and not self.catalog.has_param(child.tactic, name):
                    raise UnknownSymbol(name, "parameter")
                settings.append((name, self.constant()))
            if not settings:
                self.error("parameter setting")
            self.i += 1
            return UsingParams(child, tuple(settings))
        if head == "or-else":
            parts = [self.strategy(), self.strategy()]
            while self.peek() != ")":
                parts.append(self.strategy())
            self.i += 1
            out = parts[-1]
            for p in reversed(parts[:-1]):
                out = OrElse(p, out)
            return out
        if head == "try-for":
            child = self.strategy()
            millis = self.integer()
            if millis <= 0:
                self.i -= 1
                self.error("positive timeout")
            self.expect(")")
            return TryFor(child, millis)
        if head == "if":
            pred = self.predicate()
            a = self.strategy()
            b = self.strategy()
            self.expect(")")
            return If(pred, a, b)
        self.i -= 1
        self.error("one of then, using-params, or-else, try-for, if")

    def constant(self) -> ParamValue:
        tok = self.atom("constant")
        if tok == "true":
            return True
        if tok == "false":
            return False
        if _INT.match(tok):
            return int(tok)
        self.i -= 1
        self.error("constant (true, false or integer)")

    def probe(self, kind: str) -> str:
        name = self.atom(f"{kind} probe")
        if self.catalog is not None and name not in self.catalog.probe_kinds:
            raise UnknownSymbol(name, "probe")
        return name

    def predicate(self) -> Predicate:
        if self.peek() != "(":
            return BoolProbe(self.probe("boolean"))
        self.i += 1
        op = self.atom("comparison operator")
        if op == "not":
            self.expect("(")
            self.expect("=")
            probe = self.probe("numeric")
            c = self.integer()
            self.expect(")")
            self.expect(")")
            return Compare("!=", probe, c)
        if op not in OPERATORS or op == "!=":
            self.i -= 1
            self.error("comparison operator")
        probe = self.probe("numeric")
        c = self.integer()
        self.expect(")")
        return Compare(op, probe, c)


def parse(text: str, catalog: "TacticCatalog | None" = None) -> Strategy:
    """Parse strategy text; with a catalog, names are resolved against it."""
    p = _Parser(text, catalog)
    ast = p.strategy()
    if p.i != len(p.tokens):
        p.error("end of input")
    return ast


def parse_predicate(text: str) -> Predicate:
    p = _Parser(text, None)
    pred = p.predicate()
    if p.i != len(p.tokens):
        p.error("end of input")
    return pred
