"""Two-stage synthesis pipeline.

Stage 1 searches branch-free strategies on a training subset, a greedy
virtual-best selection keeps ``n_linear`` of them, and stage 2 searches
branched combinations of the kept strategies, scoring each candidate purely
from cached per-instance results of its members.
"""
from __future__ import annotations

import json
import logging
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

from stratsynth.catalog import TacticCatalog, catalog_to_dict
from stratsynth.errors import MissingRecord, StageError
from stratsynth.evaluation.backends import evaluate_set
from stratsynth.evaluation.features import eval_predicate
from stratsynth.evaluation.records import SOLVED, EvalCache, EvalRecord, FeatureMap, Instance
from stratsynth.evaluation.scoring import ScoreReport, par_score, reward_from_par10, score
from stratsynth.lang import If, OrElse, Strategy, TryFor, canonical_key, is_linear, render
from stratsynth.mcts import SQRT2, MctsConfig, run_search
from stratsynth.mdp import Stage, StageConfig, StrategyMdp

log = logging.getLogger(__name__)


@dataclass
class PipelineConfig:
    training_set: list[Instance]
    catalog: TacticCatalog
    stage1_subset: Optional[list[Instance]] = None
    n_linear: int = 20
    stage1_budget: int = 800
    stage2_budget: int = 300_000
    timeout_ms: int = 10_000
    long_timeout_ms: Optional[int] = None
    seed: int = 0
    c_uct: float = SQRT2
    c_bandit: float = SQRT2
    workers: int = 1
    max_linear_len: int = 8
    max_if_depth: int = 3
    max_leaves: int = 8
    stage1_subset_size: int = 250

    def __post_init__(self):
        if not self.training_set:
            raise StageError("training set is empty")
        if self.n_linear < 1:
            raise StageError("n_linear must be >= 1")
        if self.stage1_budget < 1 or self.stage2_budget < 1:
            raise StageError("simulation budgets must be >= 1")
        if self.timeout_ms <= 0 or (self.long_timeout_ms is not None and self.long_timeout_ms <= 0):
            raise StageError("timeouts must be positive")
        ids = {i.id for i in self.training_set}
        if self.stage1_subset is None:
            k = min(len(self.training_set), self.stage1_subset_size)
            picks = sorted(random.Random(self.seed).sample(range(len(self.training_set)), k))
            self.stage1_subset = [self.training_set[i] for i in picks]
        elif not self.stage1_subset:
            raise StageError("stage-1 subset is empty")
        elif any(i.id not in ids for i in self.stage1_subset):
            raise StageError("stage-1 subset must be drawn from the training set")

    @property
    def target_timeout_ms(self) -> int:
        return self.long_timeout_ms or self.timeout_ms

    @property
    def seeds(self) -> dict[str, int]:
        return {"subset": self.seed, "stage1": self.seed, "stage2": self.seed + 1}

    def stage_config(self, stage: Stage, pool: Sequence[Strategy] = ()) -> StageConfig:
        t = self.target_timeout_ms
        return StageConfig(
            stage, tuple(pool), max_linear_len=self.max_linear_len, max_if_depth=self.max_if_depth,
            max_leaves=self.max_leaves,
            try_for_ms=self.catalog.try_for_ms(t) if stage is Stage.COMBINE else (),
            timeout_ms=t if stage is Stage.COMBINE else None,
        )


@dataclass(frozen=True)
class ExecutionStep:
    linear_index: int
    budget_ms: int


@dataclass
class PipelineResult:
    portfolio: list[Strategy]
    final: Strategy
    final_report: ScoreReport
    member_reports: list[ScoreReport]
    timings: dict[str, float] = field(default_factory=dict)
    backend_calls: dict[str, int] = field(default_factory=dict)
    pool_size: int = 0

    def report_dict(self) -> dict:
        return {
            "timeout_ms": self.final_report.timeout_ms,
            "final": canonical_key(self.final),
            "portfolio": [canonical_key(p) for p in self.portfolio],
            "strategies": [self.final_report.to_dict()] + [r.to_dict() for r in self.member_reports],
        }


def _reward_over(backend, instances, timeout_ms, cache, workers) -> Callable[[Strategy], float]:
    def reward(ast: Strategy) -> float:
        recs = evaluate_set(backend, ast, instances, timeout_ms, cache, workers)
        return reward_from_par10(par_score(recs, timeout_ms, 10), timeout_ms)
    return reward


def run_stage1(cfg: PipelineConfig, backend, cache: Optional[EvalCache] = None):
    """MCTS over linear strategies on the stage-1 subset.

    Returns every distinct strategy explored (first-seen order) and the cache.
    """
    cache = cache if cache is not None else EvalCache()
    mdp = StrategyMdp(cfg.stage_config(Stage.LINEAR), cfg.catalog)
    seen: dict[str, Strategy] = {}
    score_fn = _reward_over(backend, cfg.stage1_subset, cfg.timeout_ms, cache, cfg.workers)

    def eval_fn(ast):
        seen.setdefault(canonical_key(ast), ast)
        return score_fn(ast)

    mcfg = MctsConfig(budget=cfg.stage1_budget, c_uct=cfg.c_uct, c_bandit=cfg.c_bandit, seed=cfg.seeds["stage1"])
    run_search(mdp, eval_fn, mcfg)
    return list(seen.values()), cache


def _cost_matrix(strategies: Sequence[Strategy], instances: Sequence[Instance], cache: EvalCache,
                 timeout_ms: int) -> np.ndarray:
    penalty = 10 * timeout_ms / 1000
    m = np.empty((len(strategies), len(instances)))
    for i, s in enumerate(strategies):
        key = canonical_key(s)
        for j, inst in enumerate(instances):
            rec = cache.get(key, inst.id, timeout_ms)
            if rec is None:
                raise MissingRecord(key, inst.id, timeout_ms)
            m[i, j] = rec.wall_ms / 1000 if rec.solved else penalty
    return m


def select_portfolio(pool: Sequence[Strategy], instances: Sequence[Instance], cache: EvalCache, n: int,
                     timeout_ms: int) -> list[Strategy]:
    """Greedily add the member that most improves virtual-best PAR-10.

    Ties go to the lower individual PAR-10, then to the smaller canonical key.
    Picking continues even when nothing improves, until ``n`` or exhaustion.
    """
    if not pool:
        return []
    costs = _cost_matrix(pool, instances, cache, timeout_ms)
    individual = costs.mean(axis=1)
    keys = [canonical_key(s) for s in pool]
    current = np.full(len(instances), np.inf)
    left = list(range(len(pool)))
    picks: list[int] = []
    while left and len(picks) < n:
        vbs = np.minimum(current[None, :], costs[left]).mean(axis=1)
        best = min(range(len(left)), key=lambda k: (vbs[k], individual[left[k]], keys[left[k]]))
        idx = left.pop(best)
        picks.append(idx)
        current = np.minimum(current, costs[idx])
    return [pool[i] for i in picks]


class _LeafIndex:
    """Portfolio position of a linear strategy, by AST first and canonical key as a fallback."""

    def __init__(self, portfolio: Sequence[Strategy]):
        self.by_ast = {p: i for i, p in enumerate(portfolio)}
        self.by_key = {canonical_key(p): i for i, p in enumerate(portfolio)}

    def get(self, node: Strategy) -> Optional[int]:
        i = self.by_ast.get(node)
        if i is None and is_linear(node):
            i = self.by_key.get(canonical_key(node))
        return i


def _linearize(branched: Strategy, features: FeatureMap, timeout_ms: int, index: _LeafIndex) -> list[ExecutionStep]:
    steps: list[ExecutionStep] = []
    node, remaining = branched, timeout_ms
    while True:
        if isinstance(node, If):
            node = node.then_branch if eval_predicate(node.pred, features) else node.else_branch
            continue
        if isinstance(node, OrElse) and isinstance(node.first, TryFor):
            i = index.get(node.first.child)
            if i is not None:
                budget = min(node.first.millis, remaining)
                steps.append(ExecutionStep(i, budget))
                remaining -= budget
                node = node.second
                continue
        i = index.get(node)
        if i is None:
            raise ValueError(f"not a combination of portfolio strategies: {render(node)}")
        steps.append(ExecutionStep(i, remaining))
        return steps


def linearize(branched: Strategy, features: FeatureMap, timeout_ms: int,
              portfolio: Sequence[Strategy]) -> list[ExecutionStep]:
    """Resolve branches for one instance into (portfolio member, budget) steps.

    Budgets sum to ``timeout_ms``; the last step gets whatever time is left.
    """
    return _linearize(branched, features, timeout_ms, _LeafIndex(portfolio))


def _walk(steps: Sequence[ExecutionStep], lookup: Callable[[int], tuple[str, int]],
          timeout_ms: int) -> tuple[str, int]:
    elapsed = 0
    last = "timeout"
    for n, step in enumerate(steps):
        result, t = lookup(step.linear_index)
        # the fallback leaf inherits whatever an early failure left unused
        left = timeout_ms - elapsed
        budget = left if n == len(steps) - 1 else min(step.budget_ms, left)
        if t <= budget and result != "timeout":
            elapsed += t
            if result in SOLVED:
                return result, elapsed
            last = result
        else:
            elapsed += budget
            last = "timeout"
    if elapsed >= timeout_ms:
        return "timeout", timeout_ms
    return last, elapsed


def cached_eval(branched: Strategy, instance: Instance, cache: EvalCache, timeout_ms: int,
                portfolio: Sequence[Strategy]) -> tuple[str, int]:
    """Outcome of a branched strategy derived from its members' cached runs."""
    steps = linearize(branched, instance.feature_map(), timeout_ms, portfolio)
    keys = [canonical_key(p) for p in portfolio]

    def lookup(i):
        rec = cache.get(keys[i], instance.id, timeout_ms)
        if rec is None:
            raise MissingRecord(keys[i], instance.id, timeout_ms)
        return rec.result, rec.wall_ms

    return _walk(steps, lookup, timeout_ms)


def _stage2_scorer(portfolio, instances, cache, timeout_ms):
    keys = [canonical_key(p) for p in portfolio]
    table = []
    for inst in instances:
        row = []
        for k in keys:
            rec = cache.get(k, inst.id, timeout_ms)
            if rec is None:
                raise MissingRecord(k, inst.id, timeout_ms)
            row.append((rec.result, rec.wall_ms))
        table.append(row)
    feats = [inst.feature_map() for inst in instances]
    index = _LeafIndex(portfolio)

    def outcomes(ast: Strategy) -> list[tuple[str, int]]:
        return [
            _walk(_linearize(ast, f, timeout_ms, index), row.__getitem__, timeout_ms)
            for f, row in zip(feats, table)
        ]

    def par10(ast: Strategy) -> float:
        penalty = 10 * timeout_ms / 1000
        res = outcomes(ast)
        return sum(t / 1000 if r in SOLVED else penalty for r, t in res) / len(res)

    return outcomes, par10


def run_stage2(portfolio: Sequence[Strategy], instances: Sequence[Instance], cache: EvalCache,
               cfg: PipelineConfig) -> Strategy:
    """MCTS over branched combinations; never calls a backend."""
    t = cfg.target_timeout_ms
    _, par10 = _stage2_scorer(portfolio, instances, cache, t)
    mdp = StrategyMdp(cfg.stage_config(Stage.COMBINE, portfolio), cfg.catalog)
    mcfg = MctsConfig(budget=cfg.stage2_budget, c_uct=cfg.c_uct, c_bandit=cfg.c_bandit, seed=cfg.seeds["stage2"])
    result = run_search(mdp, lambda ast: reward_from_par10(par10(ast), t), mcfg, seed_strategies=list(portfolio))
    return result.best


def _write_lines(path: Path, strategies: Sequence[Strategy]):
    path.write_text("".join(render(s) + "\n" for s in strategies), encoding="utf-8")


def synthesize(cfg: PipelineConfig, backend, cache: Optional[EvalCache] = None,
               out_dir: Optional[Path] = None) -> PipelineResult:
    """Full pipeline; with ``out_dir`` all artifacts are written there."""
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        if cache is None:
            cache = EvalCache(out / "cache.jsonl")
    cache = cache if cache is not None else EvalCache()
    timings: dict[str, float] = {}
    calls: dict[str, int] = {}
    artifacts: list[str] = ["cache.jsonl"] if cache.path is not None else []
    stage = "stage1"

    def mark(name, t0, c0):
        timings[name] = round(time.perf_counter() - t0, 3)
        calls[name] = backend.calls - c0

    try:
        t0, c0 = time.perf_counter(), backend.calls
        pool, _ = run_stage1(cfg, backend, cache)
        mark("stage1", t0, c0)

        stage = "select"
        t0, c0 = time.perf_counter(), backend.calls
        portfolio = select_portfolio(pool, cfg.stage1_subset, cache, cfg.n_linear, cfg.timeout_ms)
        for s in portfolio:
            evaluate_set(backend, s, cfg.training_set, cfg.timeout_ms, cache, cfg.workers)
        if cfg.long_timeout_ms:
            for s in portfolio:
                evaluate_set(backend, s, cfg.training_set, cfg.long_timeout_ms, cache, cfg.workers)
        mark("select", t0, c0)
        if out is not None:
            _write_lines(out / "portfolio.txt", portfolio)
            artifacts.append("portfolio.txt")

        stage = "stage2"
        t0, c0 = time.perf_counter(), backend.calls
        final = run_stage2(portfolio, cfg.training_set, cache, cfg)
        mark("stage2", t0, c0)

        stage = "report"
        t = cfg.target_timeout_ms
        outcomes, _ = _stage2_scorer(portfolio, cfg.training_set, cache, t)
        fkey = canonical_key(final)
        final_recs = [EvalRecord(fkey, inst.id, t, r, w, "cached", cfg.seed)
                      for inst, (r, w) in zip(cfg.training_set, outcomes(final))]
        final_report = score(render(final), final_recs, cfg.training_set, t)
        members = []
        for s in portfolio:
            recs = [cache.get(canonical_key(s), inst.id, t) for inst in cfg.training_set]
            members.append(score(render(s), recs, cfg.training_set, t))
        result = PipelineResult(list(portfolio), final, final_report, members, timings, calls, len(pool))
        if out is not None:
            _write_lines(out / "final_strategy.txt", [final])
            (out / "report.json").write_text(json.dumps(result.report_dict(), indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
            artifacts += ["final_strategy.txt", "report.json"]
            _write_manifest(out, cfg, backend, timings, calls, artifacts, "ok")
        return result
    except Exception as e:
        if out is not None:
            _write_manifest(out, cfg, backend, timings, calls, artifacts, "failed", stage, repr(e))
        raise


def _write_manifest(out: Path, cfg: PipelineConfig, backend, timings, calls, artifacts, status,
                    failed_stage=None, error=None):
    doc = {
        "status": status,
        "config": {
            "logic": cfg.catalog.logic,
            "catalog": catalog_to_dict(cfg.catalog),
            "training_set": [i.id for i in cfg.training_set],
            "stage1_subset": [i.id for i in cfg.stage1_subset],
            "n_linear": cfg.n_linear,
            "stage1_budget": cfg.stage1_budget,
            "stage2_budget": cfg.stage2_budget,
            "timeout_ms": cfg.timeout_ms,
            "long_timeout_ms": cfg.long_timeout_ms,
            "c_uct": cfg.c_uct,
            "c_bandit": cfg.c_bandit,
            "workers": cfg.workers,
            "max_linear_len": cfg.max_linear_len,
            "max_if_depth": cfg.max_if_depth,
            "max_leaves": cfg.max_leaves,
        },
        "seeds": cfg.seeds,
        "backend": backend.tag,
        "timings_s": timings,
        "backend_calls": calls,
        "artifacts": artifacts + ["manifest.json"],
    }
    if failed_stage:
        doc["failed_stage"] = failed_stage
        doc["error"] = error
    (out / "manifest.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def make_simulated_instances(n: int, seed: int = 0, prefix: str = "sim") -> list[Instance]:
    """Synthetic instances with random probe values and known status."""
    rng = random.Random(seed)
    out = []
    for i in range(n):
        feats = {
            "num-consts": rng.randint(1, 1000),
            "num-exprs": rng.randint(10, 20000),
            "size": rng.randint(10, 20000),
            "is-pb": rng.random() < 0.5,
            "is-unbounded": rng.random() < 0.5,
            "is-qflia": rng.random() < 0.5,
        }
        out.append(Instance(f"{prefix}-{i:04d}", None, rng.choice(["sat", "unsat"]), feats,
                            round(rng.uniform(0.5, 1.5), 3)))
    return out
