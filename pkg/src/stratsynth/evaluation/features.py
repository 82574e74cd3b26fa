"""SMT-LIB v2 reading and probe-value extraction.

Probe semantics (computed from the parsed input, not queried from a solver):

num-consts    declared 0-arity symbols (declare-const, nullary declare-fun)
num-exprs     distinct subterms over all assertions, shared subterms once
size          AST nodes over all assertions, without sharing
is-pb         every assertion is a pseudo-boolean constraint: a linear
              comparison over 0/1 ``ite`` terms of boolean-typed conditions,
              a cardinality/pb builtin, or a propositional clause; at least
              one non-clausal constraint is required
is-unbounded  some Int/Real constant lacks a lower or an upper bound among
              the top-level assertion atoms
is-qflia      all assertions are linear integer arithmetic over Int/Bool
              constants
"""
from __future__ import annotations

import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

from stratsynth.errors import MissingFeature, SmtParseError
from stratsynth.evaluation.records import FeatureMap, Instance
from stratsynth.lang import BoolProbe, Compare, Predicate

FEATURES = ("num-consts", "num-exprs", "size", "is-pb", "is-unbounded", "is-qflia")

SExpr = Union[str, list]

_TOKEN = re.compile(r'\s+|;[^\n]*|(\()|(\))|("(?:[^"]|"")*")|(\|[^|]*\|)|([^\s();"|]+)', re.S)


def parse_sexprs(text: str) -> list[SExpr]:
    out: list[SExpr] = []
    stack: list[list] = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SmtParseError(f"unexpected character at offset {pos}")
        pos = m.end()
        if m.group(1):
            stack.append([])
        elif m.group(2):
            if not stack:
                raise SmtParseError(f"unbalanced ')' at offset {m.start()}")
            done = stack.pop()
            (stack[-1] if stack else out).append(done)
        else:
            tok = m.group(3) or m.group(4) or m.group(5)
            if tok is None:
                continue
            (stack[-1] if stack else out).append(tok)
    if stack:
        raise SmtParseError("unbalanced '(' at end of input")
    return out


def _show(e: SExpr) -> str:
    return e if isinstance(e, str) else "(" + " ".join(_show(x) for x in e) + ")"


_NUMERAL = re.compile(r"\d+(\.\d+)?\Z|#x[0-9a-fA-F]+\Z|#b[01]+\Z")
_BOOL_OPS = {"and", "or", "not", "=>", "xor", "=", "distinct", "ite", "true", "false"}
_ARITH_REL = {"<=", "<", ">=", ">"}
_PB_BUILTINS = ("pbge", "pble", "pbeq", "at-most", "at-least")


@dataclass
class SmtScript:
    status: str = "unknown"
    consts: dict[str, str] = field(default_factory=dict)  # name -> sort text
    assertions: list[int] = field(default_factory=list)
    # interned terms: id -> (label, children)
    nodes: list[tuple[str, tuple[int, ...]]] = field(default_factory=list)
    _index: dict = field(default_factory=dict)

    def intern(self, label: str, children: tuple[int, ...] = ()) -> int:
        k = (label, children)
        i = self._index.get(k)
        if i is None:
            i = len(self.nodes)
            self.nodes.append(k)
            self._index[k] = i
        return i


def read_script(text: str) -> SmtScript:
    script = SmtScript()
    macros: dict[str, tuple[list[str], SExpr]] = {}

    def term(e: SExpr, env: dict[str, int]) -> int:
        if isinstance(e, str):
            if e in env:
                return env[e]
            if e in macros and not macros[e][0]:
                return term(macros[e][1], {})
            return script.intern(e)
        if not e:
            raise SmtParseError("empty term")
        head = e[0]
        if head == "let":
            bound = dict(env)
            for binding in e[1]:
                bound[binding[0]] = term(binding[1], env)
            return term(e[2], bound)
        if head == "!":
            return term(e[1], env)
        if head in ("_", "as"):
            return script.intern(_show(e))
        if head in ("forall", "exists"):
            inner = dict(env)
            for var in e[1]:
                inner[var[0]] = script.intern(var[0])
            return script.intern(head, (term(e[2], inner),))
        label = head if isinstance(head, str) else _show(head)
        args = tuple(term(a, env) for a in e[1:])
        if isinstance(head, str) and head in macros:
            params, body = macros[head]
            if len(params) != len(args):
                raise SmtParseError(f"{head} expects {len(params)} arguments")
            return term(body, dict(zip(params, args)))
        return script.intern(label, args)

    old_limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old_limit, 20000))
    try:
        for cmd in parse_sexprs(text):
            if not isinstance(cmd, list) or not cmd or not isinstance(cmd[0], str):
                raise SmtParseError(f"not a command: {_show(cmd)}")
            name = cmd[0]
            if name == "set-info" and len(cmd) >= 3 and cmd[1] == ":status":
                if cmd[2] in ("sat", "unsat", "unknown"):
                    script.status = cmd[2]
            elif name == "declare-const":
                script.consts[cmd[1]] = _show(cmd[2])
            elif name == "declare-fun":
                if len(cmd) != 4:
                    raise SmtParseError(f"malformed declare-fun: {_show(cmd)}")
                if not cmd[2]:
                    script.consts[cmd[1]] = _show(cmd[3])
            elif name == "define-fun":
                if len(cmd) != 5:
                    raise SmtParseError(f"malformed define-fun: {_show(cmd)}")
                macros[cmd[1]] = ([p[0] for p in cmd[2]], cmd[4])
            elif name == "assert":
                if len(cmd) != 2:
                    raise SmtParseError(f"malformed assert: {_show(cmd)}")
                script.assertions.append(term(cmd[1], {}))
    except (IndexError, TypeError) as e:
        raise SmtParseError(f"malformed command: {e}") from None
    finally:
        sys.setrecursionlimit(old_limit)
    return script


class _Analysis:
    def __init__(self, s: SmtScript):
        self.s = s
        self.bool_consts = {n for n, sort in s.consts.items() if sort == "Bool"}
        self.int_consts = {n for n, sort in s.consts.items() if sort == "Int"}
        self.real_consts = {n for n, sort in s.consts.items() if sort == "Real"}
        self._memo: dict[tuple[str, int], bool] = {}

    def label(self, i):
        return self.s.nodes[i][0]

    def kids(self, i):
        return self.s.nodes[i][1]

    def numeral(self, i) -> bool:
        lab, kids = self.s.nodes[i]
        if not kids:
            return bool(_NUMERAL.match(lab))
        return lab in ("-", "+", "*") and all(self.numeral(k) for k in kids)

    def numeral_value(self, i) -> float | None:
        lab, kids = self.s.nodes[i]
        if not kids and re.match(r"\d+(\.\d+)?\Z", lab):
            return float(lab)
        if lab == "-" and len(kids) == 1:
            v = self.numeral_value(kids[0])
            return None if v is None else -v
        return None

    def memo(self, tag, i, fn):
        k = (tag, i)
        if k not in self._memo:
            self._memo[k] = False  # guard against cycles (none expected)
            self._memo[k] = fn(i)
        return self._memo[k]

    def boolean(self, i) -> bool:
        """Propositional formula over Bool constants."""
        def f(i):
            lab, kids = self.s.nodes[i]
            if not kids:
                return lab in self.bool_consts or lab in ("true", "false")
            if lab in ("and", "or", "not", "=>", "xor"):
                return all(self.boolean(k) for k in kids)
            if lab in ("=", "distinct"):
                return all(self.boolean(k) for k in kids)
            if lab == "ite":
                return all(self.boolean(k) for k in kids)
            return False
        return self.memo("bool", i, f)

    def pb_term(self, i) -> bool:
        def f(i):
            lab, kids = self.s.nodes[i]
            if self.numeral(i):
                return True
            if lab == "ite" and len(kids) == 3:
                return self.boolean(kids[0]) and self.numeral(kids[1]) and self.numeral(kids[2])
            if lab in ("+", "-"):
                return all(self.pb_term(k) for k in kids)
            if lab == "*":
                nonconst = [k for k in kids if not self.numeral(k)]
                return len(nonconst) <= 1 and all(self.pb_term(k) for k in nonconst)
            return False
        return self.memo("pb", i, f)

    def pb_constraint(self, i) -> bool:
        lab, kids = self.s.nodes[i]
        if lab in _ARITH_REL or lab == "=":
            return len(kids) == 2 and all(self.pb_term(k) for k in kids) and not all(self.numeral(k) for k in kids)
        return lab.startswith("(_ ") and lab.split()[1] in _PB_BUILTINS and all(self.boolean(k) for k in kids)

    def is_pb(self) -> bool:
        if not self.s.assertions:
            return False
        found = False
        for a in self._conjuncts():
            if self.pb_constraint(a):
                found = True
            elif not self.boolean(a):
                return False
        return found

    def _conjuncts(self) -> list[int]:
        out, pending = [], list(reversed(self.s.assertions))
        while pending:
            i = pending.pop()
            lab, kids = self.s.nodes[i]
            if lab == "and":
                pending.extend(reversed(kids))
            else:
                out.append(i)
        return out

    def is_unbounded(self) -> bool:
        arith = self.int_consts | self.real_consts
        if not arith:
            return False
        lower, upper = set(), set()
        for a in self._conjuncts():
            lab, kids = self.s.nodes[a]
            neg = False
            if lab == "not" and len(kids) == 1:
                neg = True
                lab, kids = self.s.nodes[kids[0]]
            if len(kids) != 2 or lab not in _ARITH_REL | {"="}:
                continue
            x, y = (self.label(k) for k in kids)
            if not self.kids(kids[0]) and x in arith and self.numeral(kids[1]):
                var, op = x, lab
            elif not self.kids(kids[1]) and y in arith and self.numeral(kids[0]):
                var, op = y, {"<=": ">=", "<": ">", ">=": "<=", ">": "<", "=": "="}[lab]
            else:
                continue
            if neg:
                if op == "=":
                    continue
                op = {"<=": ">", "<": ">=", ">=": "<", ">": "<="}[op]
            if op in ("<=", "<", "="):
                upper.add(var)
            if op in (">=", ">", "="):
                lower.add(var)
        return any(v not in lower or v not in upper for v in arith)

    def lia(self, i) -> bool:
        def f(i):
            lab, kids = self.s.nodes[i]
            if not kids:
                return (lab in self.int_consts or lab in self.bool_consts or lab in ("true", "false")
                        or bool(re.match(r"\d+\Z", lab)))
            if lab in _BOOL_OPS or lab in _ARITH_REL or lab in ("+", "-"):
                return all(self.lia(k) for k in kids)
            if lab == "*":
                return sum(1 for k in kids if not self.numeral(k)) <= 1 and all(self.lia(k) for k in kids)
            return False
        return self.memo("lia", i, f)

    def is_qflia(self) -> bool:
        if self.real_consts or any(s not in ("Int", "Bool") for s in self.s.consts.values()):
            return False
        return all(self.lia(a) for a in self.s.assertions)


def script_features(s: SmtScript) -> FeatureMap:
    sizes: dict[int, int] = {}
    for i, (_, kids) in enumerate(s.nodes):
        # children are always interned before their parent
        sizes[i] = 1 + sum(sizes[k] for k in kids)
    seen: set[int] = set()
    pending = list(s.assertions)
    while pending:
        i = pending.pop()
        if i in seen:
            continue
        seen.add(i)
        pending.extend(s.nodes[i][1])
    an = _Analysis(s)
    return {
        "num-consts": len(s.consts),
        "num-exprs": len(seen),
        "size": sum(sizes[a] for a in s.assertions),
        "is-pb": an.is_pb(),
        "is-unbounded": an.is_unbounded(),
        "is-qflia": an.is_qflia(),
    }


def extract_features(instance: Union[Instance, str, Path]) -> FeatureMap:
    path = instance.path if isinstance(instance, Instance) else Path(instance)
    return script_features(read_script(Path(path).read_text(encoding="utf-8")))


def eval_predicate(pred: Predicate, features: FeatureMap) -> bool:
    name = pred.name if isinstance(pred, BoolProbe) else pred.probe
    if name not in features:
        raise MissingFeature(name)
    value = features[name]
    if isinstance(pred, BoolProbe):
        return bool(value)
    c = pred.constant
    return {
        ">": value > c, "<": value < c, ">=": value >= c,
        "<=": value <= c, "=": value == c, "!=": value != c,
    }[pred.op]


def load_instance(path: Union[str, Path], root: Union[str, Path, None] = None) -> Instance:
    path = Path(path)
    ident = path.relative_to(root).as_posix() if root is not None else path.name
    text = path.read_text(encoding="utf-8")
    m = re.search(r"\(\s*set-info\s+:status\s+(sat|unsat|unknown)\s*\)", text)
    return Instance(ident, path, m.group(1) if m else "unknown")


def load_benchmarks(dirs: Iterable[Union[str, Path]]) -> list[Instance]:
    """All ``*.smt2`` files under the given directories, sorted by id."""
    out: list[Instance] = []
    for d in dirs:
        d = Path(d)
        if d.is_file():
            out.append(load_instance(d, d.parent))
            continue
        for p in sorted(d.rglob("*.smt2")):
            out.append(load_instance(p, d))
    ids = [i.id for i in out]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate instance ids across benchmark directories")
    return out
