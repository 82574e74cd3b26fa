"""Strategy execution backends.

``ExternalBackend`` runs a real solver binary on a rewritten copy of the
instance.  ``SimulatedBackend`` is a deterministic cost model used for tests
and desk-scale experiments: a linear strategy's outcome on an instance is a
pure function of (canonical key, instance id, seed), and branched strategies
are interpreted directly over those outcomes.
"""
from __future__ import annotations

import hashlib
import itertools
import os
import re
import shlex
import shutil
import signal
import subprocess
import tempfile
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional, Sequence, Union

from stratsynth.errors import BackendUnavailable
from stratsynth.evaluation.features import eval_predicate
from stratsynth.evaluation.records import SOLVED, EvalCache, EvalRecord, Instance
from stratsynth.lang import If, OrElse, Strategy, TryFor, canonical_key, render

StrategyLike = Union[Strategy, str]


def _key_and_text(strategy: StrategyLike) -> tuple[str, str]:
    if isinstance(strategy, str):
        return strategy, strategy
    return canonical_key(strategy), render(strategy)


class _Counter:
    def __init__(self):
        self._it = itertools.count(1)
        self._lock = threading.Lock()
        self.value = 0

    def bump(self):
        with self._lock:
            self.value = next(self._it)


_CHECK_SAT = re.compile(r"\(\s*check-sat\s*\)")


def rewrite_instance(text: str, strategy_text: str) -> str:
    """Replace the first check-sat with check-sat-using and drop what follows."""
    m = _CHECK_SAT.search(text)
    head = text[:m.start()] if m else text
    return f"{head}(check-sat-using {strategy_text})\n(exit)\n"


class ExternalBackend:
    def __init__(self, solver_path: str = "z3", command_template: str = "{solver_path} {file}",
                 grace_ms: int = 250, seed: int = 0, tmp_dir: Optional[str] = None):
        resolved = shutil.which(solver_path)
        if resolved is None:
            raise BackendUnavailable(f"solver binary {solver_path!r} not found")
        self.solver_path = resolved
        self.command_template = command_template
        self.grace_ms = grace_ms
        self.seed = seed
        self.tmp_dir = tmp_dir
        self.tag = f"external:{Path(resolved).name}"
        self._calls = _Counter()

    @property
    def calls(self) -> int:
        return self._calls.value

    def execute(self, strategy: StrategyLike, instance: Instance, timeout_ms: int) -> EvalRecord:
        if timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        key, text = _key_and_text(strategy)
        self._calls.bump()
        source = Path(instance.path).read_text(encoding="utf-8")
        fd, tmp = tempfile.mkstemp(suffix=".smt2", dir=self.tmp_dir)
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(rewrite_instance(source, text))
            args = shlex.split(self.command_template.format(solver_path=self.solver_path, file=tmp, seed=self.seed))
            result, wall = self._run(args, timeout_ms)
        finally:
            try:
                os.unlink(tmp)
            except OSError:
                pass
        return EvalRecord(key, instance.id, timeout_ms, result, wall, self.tag, self.seed)

    def _run(self, args: list[str], timeout_ms: int) -> tuple[str, int]:
        start = time.perf_counter()
        try:
            proc = subprocess.Popen(args, stdout=subprocess.PIPE, stderr=subprocess.PIPE,
                                    start_new_session=True, text=True)
        except FileNotFoundError as e:
            raise BackendUnavailable(str(e)) from e
        try:
            out, _ = proc.communicate(timeout=(timeout_ms + self.grace_ms) / 1000)
        except subprocess.TimeoutExpired:
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            proc.communicate()
            return "timeout", timeout_ms
        wall = int(round((time.perf_counter() - start) * 1000))
        if wall > timeout_ms:
            return "timeout", timeout_ms
        first = out.split()[0] if out.split() else ""
        if proc.returncode != 0 or first not in ("sat", "unsat", "unknown"):
            return "error", wall
        return first, wall


def _hash(*parts) -> bytes:
    h = hashlib.blake2b(digest_size=16)
    for p in parts:
        h.update(str(p).encode("utf-8"))
        h.update(b"\x00")
    return h.digest()


class SimulatedBackend:
    """Seeded synthetic solver.

    Intrinsic outcome of linear strategy L on instance f: u uniform in [0, 1)
    from a hash of (seed, key(L), f.id) gives the runtime
    ``t = 1 + floor(u * 2 * horizon_ms * f.difficulty)``; a second hash bit
    decides whether the run ends with f's expected status or ``unknown``.
    Under a timeout T the record is (result, t) when t <= T, else (timeout, T).

    With ``affinity_probe`` set, each strategy gets a hashed affinity bit and
    only solves instances whose probe value matches it (fast, always
    correct); on the others it never finishes.  This gives fixtures where a
    branch on that probe is the optimal combination.
    """

    def __init__(self, seed: int = 0, horizon_ms: int = 10_000, affinity_probe: Optional[str] = None):
        self.seed = seed
        self.horizon_ms = horizon_ms
        self.affinity_probe = affinity_probe
        self.tag = f"simulated:{seed}"
        self._calls = _Counter()

    @property
    def calls(self) -> int:
        return self._calls.value

    def outcome(self, key: str, instance: Instance) -> tuple[str, int]:
        """Intrinsic (result, runtime_ms) of a linear strategy, ignoring timeouts."""
        d = _hash(self.seed, key, instance.id)
        u = int.from_bytes(d[:8], "big") / 2.0 ** 64
        passes = bool(d[8] & 1)
        if self.affinity_probe is not None:
            side = bool(instance.feature_map()[self.affinity_probe])
            likes = bool(_hash(self.seed, key, "affinity")[0] & 1)
            if side != likes:
                return "unknown", 2 * self.horizon_ms + 1
            return instance.expected_status, 1 + int(u * self.horizon_ms / 4)
        t = 1 + int(u * 2 * self.horizon_ms * instance.difficulty)
        return (instance.expected_status if passes else "unknown"), t

    def _run(self, node: Strategy, instance: Instance, budget: int) -> tuple[str, int]:
        if isinstance(node, If):
            branch = node.then_branch if eval_predicate(node.pred, instance.feature_map()) else node.else_branch
            return self._run(branch, instance, budget)
        if isinstance(node, TryFor):
            return self._run(node.child, instance, min(node.millis, budget))
        if isinstance(node, OrElse):
            r, spent = self._run(node.first, instance, budget)
            if r in SOLVED:
                return r, spent
            r2, spent2 = self._run(node.second, instance, budget - spent)
            return r2, spent + spent2
        result, t = self.outcome(canonical_key(node), instance)
        if t <= budget:
            return result, t
        return "timeout", budget

    def execute(self, strategy: StrategyLike, instance: Instance, timeout_ms: int) -> EvalRecord:
        if timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        self._calls.bump()
        if isinstance(strategy, str):
            from stratsynth.lang import parse
            from stratsynth.errors import StrategySyntaxError
            try:
                strategy = parse(strategy)
            except StrategySyntaxError:
                return EvalRecord(strategy, instance.id, timeout_ms, "error", 0, self.tag, self.seed)
        result, spent = self._run(strategy, instance, timeout_ms)
        if result not in SOLVED and spent >= timeout_ms:
            result, spent = "timeout", timeout_ms
        return EvalRecord(canonical_key(strategy), instance.id, timeout_ms, result, spent, self.tag, self.seed)


def execute(backend, strategy: StrategyLike, instance: Instance, timeout_ms: int) -> EvalRecord:
    return backend.execute(strategy, instance, timeout_ms)


def evaluate_set(backend, strategy: StrategyLike, instances: Sequence[Instance], timeout_ms: int,
                 cache: Optional[EvalCache] = None, workers: int = 1) -> list[EvalRecord]:
    """Records for ``strategy`` on each instance, in instance order; misses are executed and cached."""
    key, _ = _key_and_text(strategy)
    out: list[Optional[EvalRecord]] = [None] * len(instances)
    missing = []
    for i, inst in enumerate(instances):
        rec = cache.get(key, inst.id, timeout_ms) if cache is not None else None
        if rec is None:
            missing.append(i)
        else:
            out[i] = rec
    if not missing:
        return out

    def run(i):
        return backend.execute(strategy, instances[i], timeout_ms)

    if workers > 1 and len(missing) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            fresh = list(pool.map(run, missing))
    else:
        fresh = [run(i) for i in missing]
    for i, rec in zip(missing, fresh):
        if cache is not None:
            cache.add(rec)
        out[i] = rec
    return out
