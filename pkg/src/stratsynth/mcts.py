"""MCTS with UCT selection, random rollouts and max-backup.

Tactic parameters are tuned by bandits hung off tree edges (layered search):
a bandit never adds nodes to the tree.  Bandits for edges that only exist in
a rollout live in a side table keyed by the action path and move onto the
node when that edge is later expanded.

The engine works against any MDP object providing ``initial_state``,
``legal_actions``, ``step``, ``is_terminal``, ``action_params``, ``finish``
and ``key`` (see ``mdp.StrategyMdp``).
"""
from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

from stratsynth.errors import EvaluationError, RolloutOverflow

log = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)


@dataclass
class MctsConfig:
    budget: int = 800
    c_uct: float = SQRT2
    c_bandit: float = SQRT2
    seed: int = 0
    rollout_cap: int = 10_000
    trace_path: Optional[str] = None

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if self.c_uct <= 0 or self.c_bandit <= 0:
            raise ValueError("exploration constants must be positive")


def uct_score(visits: int, q_max: float, parent_visits: int, c: float) -> float:
    if visits == 0:
        return math.inf
    return q_max + c * math.sqrt(math.log(parent_visits) / visits)


@dataclass
class Arm:
    value: Any
    pulls: int = 0
    q_max: float = 0.0


@dataclass
class ParamBandit:
    param: str
    arms: list[Arm]
    owner: tuple = ()

    @classmethod
    def for_param(cls, param, owner=()) -> "ParamBandit":
        return cls(param.name, [Arm(v) for v in param.candidates], owner)

    @property
    def total_pulls(self) -> int:
        return sum(a.pulls for a in self.arms)


def bandit_select(bandit: ParamBandit, c: float) -> Arm:
    """UCB1 arm choice; unpulled arms first, ties go to the earlier arm."""
    for arm in bandit.arms:
        if arm.pulls == 0:
            return arm
    log_total = math.log(bandit.total_pulls)
    best, best_score = bandit.arms[0], -math.inf
    for arm in bandit.arms:
        score = arm.q_max + c * math.sqrt(log_total / arm.pulls)
        if score > best_score:
            best, best_score = arm, score
    return best


class SearchNode:
    __slots__ = ("state", "visits", "q_max", "children", "unexpanded", "bandits")

    def __init__(self, state):
        self.state = state
        self.visits = 0
        self.q_max = 0.0
        self.children: dict = {}
        self.unexpanded: Optional[list] = None
        # parameter bandits for the edge leading into this node
        self.bandits: dict[str, ParamBandit] = {}


@dataclass
class SearchResult:
    best: Any
    best_reward: float
    trace: list[tuple[int, str, float]] = field(default_factory=list)
    evaluations: int = 0

    @property
    def best_ast(self):
        return self.best


class MctsSearch:
    def __init__(self, mdp, eval_fn: Callable[[Any], float], cfg: MctsConfig):
        self.mdp = mdp
        self.eval_fn = eval_fn
        self.cfg = cfg
        self.rng = random.Random(cfg.seed)
        self.root = SearchNode(mdp.initial_state())
        self.side_bandits: dict[tuple, ParamBandit] = {}
        self.rewards: dict[str, float] = {}
        self.evaluations = 0

    def evaluate(self, strategy) -> tuple[str, float]:
        key = self.mdp.key(strategy)
        if key in self.rewards:
            return key, self.rewards[key]
        try:
            reward = float(self.eval_fn(strategy))
        except Exception as e:
            raise EvaluationError(strategy, key) from e
        self.evaluations += 1
        self.rewards[key] = reward
        return key, reward

    def _select_child(self, node: SearchNode):
        best, best_score = None, -math.inf
        for action, child in node.children.items():
            score = uct_score(child.visits, child.q_max, node.visits, self.cfg.c_uct)
            if score > best_score:
                best, best_score = (action, child), score
        return best

    def run_simulation(self):
        """One selection/expansion/rollout/backup round; returns (strategy, key, reward)."""
        mdp = self.mdp
        node = self.root
        path = [node]
        actions: list = []
        # selection + expansion
        while not mdp.is_terminal(node.state):
            if node.unexpanded is None:
                node.unexpanded = list(mdp.legal_actions(node.state))
            if node.unexpanded:
                action = node.unexpanded.pop(0)
                child = SearchNode(mdp.step(node.state, action))
                node.children[action] = child
                edge = tuple(actions) + (action,)
                for param in mdp.action_params(action):
                    moved = self.side_bandits.pop((edge, param.name), None)
                    if moved is not None:
                        child.bandits[param.name] = moved
                path.append(child)
                actions.append(action)
                break
            action, node = self._select_child(node)
            path.append(node)
            actions.append(action)
        n_tree = len(actions)
        # rollout
        state = path[-1].state
        steps = 0
        while not mdp.is_terminal(state):
            if steps >= self.cfg.rollout_cap:
                raise RolloutOverflow(f"no terminal state within {self.cfg.rollout_cap} rollout steps")
            action = self.rng.choice(mdp.legal_actions(state))
            state = mdp.step(state, action)
            actions.append(action)
            steps += 1
        # layered parameter choice
        engaged: list[Arm] = []
        settings = {}
        for pos, action in enumerate(actions):
            param_specs = mdp.action_params(action)
            if not param_specs:
                continue
            chosen = []
            for param in param_specs:
                if pos < n_tree:
                    table = path[pos + 1].bandits
                    bandit = table.get(param.name)
                    if bandit is None:
                        bandit = table[param.name] = ParamBandit.for_param(param, (pos,))
                else:
                    skey = (tuple(actions[:pos + 1]), param.name)
                    bandit = self.side_bandits.get(skey)
                    if bandit is None:
                        bandit = self.side_bandits[skey] = ParamBandit.for_param(param, (pos,))
                arm = bandit_select(bandit, self.cfg.c_bandit)
                engaged.append(arm)
                chosen.append((param.name, arm.value))
            settings[pos] = tuple(chosen)
        strategy = mdp.finish(state, settings)
        key, reward = self.evaluate(strategy)
        # max-backup
        for n in path:
            n.visits += 1
            if reward > n.q_max:
                n.q_max = reward
        for arm in engaged:
            arm.pulls += 1
            if reward > arm.q_max:
                arm.q_max = reward
        return strategy, key, reward


def run_search(mdp, eval_fn: Callable[[Any], float], cfg: MctsConfig,
               seed_strategies: Sequence = ()) -> SearchResult:
    """Run ``cfg.budget`` simulations and return the best strategy seen.

    ``seed_strategies`` are evaluated first and compete for the best slot;
    they appear in the trace with negative indices.
    """
    search = MctsSearch(mdp, eval_fn, cfg)
    trace: list[tuple[int, str, float]] = []
    best, best_reward = None, -math.inf
    for i, s in enumerate(seed_strategies):
        key, reward = search.evaluate(s)
        trace.append((-(i + 1), key, reward))
        if reward > best_reward:
            best, best_reward = s, reward
    for i in range(cfg.budget):
        strategy, key, reward = search.run_simulation()
        trace.append((i, key, reward))
        if reward > best_reward:
            best, best_reward = strategy, reward
    if cfg.trace_path:
        with open(cfg.trace_path, "w", encoding="utf-8") as fh:
            for i, key, reward in trace:
                fh.write(f"{i}\t{reward:.6f}\t{key}\n")
    return SearchResult(best, best_reward, trace, search.evaluations)
