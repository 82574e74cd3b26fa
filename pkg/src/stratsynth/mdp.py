"""Strategy construction as a deterministic MDP over leftmost derivations.

A state is the sequence of productions applied so far plus a stack of open
holes (top of stack = leftmost hole).  The partial strategy is recovered by
replaying the productions in preorder, so states stay small and hashable.

Stage ``linear`` grammar::

    S -> t                      t a solver-wrapper tactic
       | (then t S)             t a preprocessing tactic

Stage ``combine`` grammar, over a pool of linear strategies L0..Ln::

    S -> Li
       | (if P S S)
       | (or-else (try-for Li c) S)
    P -> predicate from the catalog's predicate pool

Tactic parameters are not actions; the search engine picks them with
per-edge bandits (see ``mcts``).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Mapping, Optional

from stratsynth.catalog import ParamSpec, TacticCatalog, predicate_pool
from stratsynth.errors import IllegalAction, NotTerminal, StageError, TerminalState
from stratsynth.lang import (
    BoolProbe, If, Leaf, OrElse, Predicate, Settings, Strategy, Then, TryFor, UsingParams,
    canonical_key, is_linear, render,
)


class Stage(str, Enum):
    LINEAR = "linear"
    COMBINE = "combine"


@dataclass(frozen=True)
class StageConfig:
    stage: Stage
    linear_pool: tuple[Strategy, ...] = ()
    max_linear_len: int = 8
    max_if_depth: int = 3
    max_leaves: int = 8
    try_for_ms: tuple[int, ...] = ()
    timeout_ms: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "stage", Stage(self.stage))
        object.__setattr__(self, "linear_pool", tuple(self.linear_pool))
        if self.stage is Stage.COMBINE:
            if not self.linear_pool:
                raise StageError("combine stage needs a nonempty linear pool")
            if not all(is_linear(s) for s in self.linear_pool):
                raise StageError("combine-stage pool members must be branch-free")
            if self.max_leaves < 1:
                raise StageError("max_leaves must be >= 1")
        if self.max_linear_len < 1:
            raise StageError("max_linear_len must be >= 1")


class HoleKind(str, Enum):
    STRATEGY = "Strategy"
    PREDICATE = "Predicate"


@dataclass(frozen=True)
class Hole:
    kind: HoleKind
    depth: int
    under_try_for: bool = False
    tactic_applied_before: bool = False
    nla2bv_count: int = 0
    last_tactic: Optional[str] = None
    applied: int = 0
    remaining_ms: Optional[int] = None


@dataclass(frozen=True)
class Action:
    kind: str  # solver | then | pool | if | pred | try_for
    tactic: Optional[str] = None
    index: Optional[int] = None
    predicate: Optional[Predicate] = None
    millis: Optional[int] = None

    def __str__(self):
        if self.kind in ("solver", "then"):
            return f"{self.kind}:{self.tactic}"
        if self.kind == "pool":
            return f"pool:{self.index}"
        if self.kind == "pred":
            from stratsynth.lang import render_predicate
            return f"pred:{render_predicate(self.predicate)}"
        if self.kind == "try_for":
            return f"try_for:{self.index}:{self.millis}"
        return self.kind


@dataclass(frozen=True)
class DerivationState:
    productions: tuple[Action, ...]
    holes: tuple[Hole, ...]
    stage: StageConfig = field(compare=False, repr=False)
    catalog: Optional[TacticCatalog] = field(compare=False, repr=False)
    leaves: int = 0

    @property
    def terminal(self) -> bool:
        return not self.holes

    def __str__(self):
        return render(_decode(self, None, partial=True))


def initial_state(stage: StageConfig, catalog: Optional[TacticCatalog] = None) -> DerivationState:
    if stage.stage is Stage.LINEAR and catalog is None:
        raise StageError("linear stage needs a catalog")
    root = Hole(HoleKind.STRATEGY, 0, remaining_ms=stage.timeout_ms)
    return DerivationState((), (root,), stage, catalog)


def _pending_strategies(state: DerivationState) -> int:
    return sum(1 for h in state.holes if h.kind is HoleKind.STRATEGY)


def legal_actions(state: DerivationState) -> list[Action]:
    """Legal productions at the leftmost hole, in canonical order."""
    if state.terminal:
        raise TerminalState("no holes left")
    hole = state.holes[-1]
    stage, cat = state.stage, state.catalog
    if hole.kind is HoleKind.PREDICATE:
        return [Action("pred", predicate=p) for p in predicate_pool(cat)]
    out = []
    if stage.stage is Stage.LINEAR:
        room = hole.applied + 2 <= stage.max_linear_len
        for t in cat.tactics:
            if t.solver_wrapper:
                out.append(Action("solver", tactic=t.name))
                continue
            if not room:
                continue
            if t.name == "nla2bv" and hole.nla2bv_count >= 1:
                continue
            if t.name == "bit-blast" and hole.last_tactic != "simplify":
                continue
            out.append(Action("then", tactic=t.name))
        return out
    pool = stage.linear_pool
    out.extend(Action("pool", index=i) for i in range(len(pool)))
    grows = state.leaves + _pending_strategies(state) + 1 <= stage.max_leaves
    if grows and hole.depth < stage.max_if_depth and not hole.tactic_applied_before and cat is not None:
        if predicate_pool(cat):
            out.append(Action("if"))
    if grows and not hole.under_try_for:
        for i in range(len(pool)):
            for c in stage.try_for_ms:
                if hole.remaining_ms is None or c < hole.remaining_ms:
                    out.append(Action("try_for", index=i, millis=c))
    return out


def _successor(state: DerivationState, action: Action) -> DerivationState:
    hole = state.holes[-1]
    rest = state.holes[:-1]
    leaves = state.leaves
    k = action.kind
    if k == "solver":
        new = ()
    elif k == "then":
        new = (replace(
            hole, depth=hole.depth + 1, tactic_applied_before=True,
            nla2bv_count=hole.nla2bv_count + (action.tactic == "nla2bv"),
            last_tactic=action.tactic, applied=hole.applied + 1,
        ),)
    elif k == "pool":
        new = ()
        leaves += 1
    elif k == "if":
        child = replace(hole, depth=hole.depth + 1)
        # pushed right-to-left so the predicate is on top
        new = (child, child, Hole(HoleKind.PREDICATE, hole.depth + 1))
    elif k == "pred":
        new = ()
    elif k == "try_for":
        remaining = None if hole.remaining_ms is None else hole.remaining_ms - action.millis
        new = (replace(hole, depth=hole.depth + 1, remaining_ms=remaining),)
        leaves += 1
    else:
        raise IllegalAction(f"unknown action kind {k!r}")
    return DerivationState(state.productions + (action,), rest + new, state.stage, state.catalog, leaves)


def apply_action(state: DerivationState, action: Action) -> DerivationState:
    if state.terminal:
        raise IllegalAction("state is terminal")
    if action not in legal_actions(state):
        raise IllegalAction(f"{action} is not legal here")
    return _successor(state, action)


_HOLE_STRATEGY = Leaf("⟨Strategy⟩")
_HOLE_PREDICATE = BoolProbe("⟨Predicate⟩")


def _decode(state: DerivationState, settings: Optional[Mapping[int, Settings]], partial: bool) -> Strategy:
    prods = state.productions
    pool = state.stage.linear_pool
    pos = 0

    def app(i, tactic):
        s = settings.get(i) if settings else None
        return UsingParams(Leaf(tactic), tuple(s)) if s else Leaf(tactic)

    def strategy():
        nonlocal pos
        if pos >= len(prods):
            if partial:
                return _HOLE_STRATEGY
            raise NotTerminal("derivation incomplete")
        i, a = pos, prods[pos]
        pos += 1
        if a.kind == "solver":
            return app(i, a.tactic)
        if a.kind == "then":
            return Then(app(i, a.tactic), strategy())
        if a.kind == "pool":
            return pool[a.index]
        if a.kind == "if":
            p = predicate()
            return If(p, strategy(), strategy())
        if a.kind == "try_for":
            return OrElse(TryFor(pool[a.index], a.millis), strategy())
        raise ValueError(f"unexpected production {a}")

    def predicate():
        nonlocal pos
        if pos >= len(prods):
            if partial:
                return _HOLE_PREDICATE
            raise NotTerminal("derivation incomplete")
        a = prods[pos]
        pos += 1
        return a.predicate

    return strategy()


def finish(state: DerivationState, settings: Optional[Mapping[int, Settings]] = None) -> Strategy:
    """Completed strategy; ``settings`` maps production index -> parameter settings."""
    if not state.terminal:
        raise NotTerminal("state still has open holes")
    return _decode(state, settings, partial=False)


class StrategyMdp:
    """Adapter exposing the MDP to the search engine."""

    def __init__(self, stage: StageConfig, catalog: Optional[TacticCatalog]):
        self.stage = stage
        self.catalog = catalog

    def initial_state(self) -> DerivationState:
        return initial_state(self.stage, self.catalog)

    def legal_actions(self, state: DerivationState) -> list[Action]:
        return legal_actions(state)

    def step(self, state: DerivationState, action: Action) -> DerivationState:
        return _successor(state, action)

    def is_terminal(self, state: DerivationState) -> bool:
        return state.terminal

    def action_params(self, action: Action) -> tuple[ParamSpec, ...]:
        if action.kind in ("solver", "then") and self.catalog is not None:
            return self.catalog.tactic(action.tactic).params
        return ()

    def finish(self, state: DerivationState, settings=None) -> Strategy:
        return finish(state, settings)

    def key(self, strategy: Strategy) -> str:
        return canonical_key(strategy)
