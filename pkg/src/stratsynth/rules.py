"""Domain-knowledge restrictions on strategy shape.

R1  a strategy ends in a solver-wrapper tactic, and no tactic follows one
R2  no try-for inside a strategy already limited by a try-for
R3  ``if`` only in the first three syntax-tree depths, and never after a
    tactic application
R5  nla2bv at most once along any sequence of tactic applications
R6  bit-blast only immediately after simplify

(R4, preselected candidate values, is enforced by the catalog itself.)
"""
from __future__ import annotations

from dataclasses import dataclass

from stratsynth.catalog import TacticCatalog
from stratsynth.lang import BoolProbe, If, Leaf, OrElse, Strategy, Then, TryFor, UsingParams

MAX_IF_DEPTH = 3


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str


def validate(ast: Strategy, catalog: TacticCatalog, max_if_depth: int = MAX_IF_DEPTH) -> list[Violation]:
    """Return one violation per broken rule, ordered by rule name."""
    found: dict[str, str] = {}

    def flag(rule: str, detail: str):
        found.setdefault(rule, detail)

    def check_app(app, as_head: bool):
        name = app.tactic
        tactic_spec = catalog.tactic_names.get(name)
        if tactic_spec is None:
            flag("UNKNOWN", f"tactic {name!r} not in catalog")
            return
        if isinstance(app, UsingParams):
            for param, _ in app.settings:
                if not catalog.has_param(name, param):
                    flag("UNKNOWN", f"parameter {param!r} not declared for {name!r}")
        if as_head and tactic_spec.solver_wrapper:
            flag("R1", f"tactic applied after solver wrapper {name!r}")
        if not as_head and not tactic_spec.solver_wrapper:
            flag("R1", f"strategy ends in non-solver tactic {name!r}")

    def walk(node, depth, under_try_for, applied, nla2bv, last):
        if isinstance(node, (Leaf, UsingParams)):
            check_app(node, as_head=False)
        elif isinstance(node, Then):
            check_app(node.head, as_head=True)
            name = node.head.tactic
            if name == "nla2bv":
                nla2bv += 1
                if nla2bv > 1:
                    flag("R5", "nla2bv applied more than once in a sequence")
            if name == "bit-blast" and last != "simplify":
                flag("R6", f"bit-blast after {last or 'nothing'}")
            walk(node.tail, depth + 1, under_try_for, True, nla2bv, name)
        elif isinstance(node, OrElse):
            walk(node.first, depth + 1, under_try_for, applied, nla2bv, last)
            walk(node.second, depth + 1, under_try_for, applied, nla2bv, last)
        elif isinstance(node, TryFor):
            if under_try_for:
                flag("R2", "nested try-for")
            walk(node.child, depth + 1, True, applied, nla2bv, last)
        elif isinstance(node, If):
            if depth >= max_if_depth:
                flag("R3", f"if at depth {depth}")
            if applied:
                flag("R3", "if after a tactic application")
            probe = node.pred.name if isinstance(node.pred, BoolProbe) else node.pred.probe
            kinds = catalog.probe_kinds
            want = "boolean" if isinstance(node.pred, BoolProbe) else "numeric"
            if kinds.get(probe) != want:
                flag("UNKNOWN", f"{want} probe {probe!r} not in catalog")
            walk(node.then_branch, depth + 1, under_try_for, applied, nla2bv, last)
            walk(node.else_branch, depth + 1, under_try_for, applied, nla2bv, last)
        else:
            raise TypeError(f"not a strategy node: {node!r}")

    walk(ast, 0, False, False, 0, None)
    return [Violation(r, found[r]) for r in sorted(found)]
