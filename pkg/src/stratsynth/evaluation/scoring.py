"""PAR-k scores, rewards, answer classification and virtual-best analysis."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from stratsynth.errors import EmptySet, MissingRecord
from stratsynth.evaluation.records import SOLVED, EvalCache, EvalRecord, Instance


def par_score(records: Sequence[EvalRecord], timeout_ms: int, k: float = 10) -> float:
    """Mean runtime in seconds; each unsolved run costs ``k`` x timeout."""
    if not records:
        raise EmptySet("PAR score of an empty record set")
    penalty = k * timeout_ms / 1000
    total = sum(r.wall_ms / 1000 if r.result in SOLVED else penalty for r in records)
    return total / len(records)


def reward_from_par10(par10_s: float, timeout_ms: int) -> float:
    return 1.0 - par10_s / (10 * timeout_ms / 1000)


def classify(record: EvalRecord, expected: str) -> str:
    if record.result not in SOLVED:
        return "unsolved"
    if expected in SOLVED and record.result != expected:
        return "wrong"
    return "correct"


def vbs_par10(strategy_keys: Iterable[str], instances: Sequence[Instance], cache: EvalCache,
              timeout_ms: int) -> float:
    """PAR-10 of an oracle that picks the fastest solving strategy per instance."""
    keys = list(strategy_keys)
    if not instances or not keys:
        raise EmptySet("virtual best over an empty set")
    synthetic = []
    for inst in instances:
        best = None
        for key in keys:
            rec = cache.get(key, inst.id, timeout_ms)
            if rec is None:
                raise MissingRecord(key, inst.id, timeout_ms)
            if rec.solved and (best is None or rec.wall_ms < best.wall_ms):
                best = rec
        if best is None:
            best = EvalRecord("<vbs>", inst.id, timeout_ms, "timeout", timeout_ms)
        synthetic.append(best)
    return par_score(synthetic, timeout_ms, 10)


@dataclass
class ScoreReport:
    name: str
    timeout_ms: int
    total: int
    solved_count: int
    correct_count: int
    wrong_count: int
    par2: float
    par10: float
    rows: list[dict] = field(default_factory=list)

    @property
    def percentage(self) -> float:
        return 100.0 * self.correct_count / self.total if self.total else 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "timeout_ms": self.timeout_ms,
            "total": self.total,
            "solved_count": self.solved_count,
            "correct_count": self.correct_count,
            "wrong_count": self.wrong_count,
            "percentage": round(self.percentage, 6),
            "par2": round(self.par2, 6),
            "par10": round(self.par10, 6),
            "rows": self.rows,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreReport":
        d = dict(d)
        d.pop("percentage", None)
        return cls(**d)


def score(name: str, records: Sequence[EvalRecord], instances: Sequence[Instance], timeout_ms: int) -> ScoreReport:
    """Score records that line up one-to-one with ``instances``."""
    if len(records) != len(instances):
        raise ValueError("records and instances differ in length")
    rows = []
    correct = wrong = 0
    for rec, inst in zip(records, instances):
        verdict = classify(rec, inst.expected_status)
        correct += verdict == "correct"
        wrong += verdict == "wrong"
        rows.append({"instance": inst.id, "result": rec.result, "wall_ms": rec.wall_ms,
                     "expected": inst.expected_status, "verdict": verdict})
    return ScoreReport(
        name=name,
        timeout_ms=timeout_ms,
        total=len(records),
        solved_count=sum(r.solved for r in records),
        correct_count=correct,
        wrong_count=wrong,
        par2=par_score(records, timeout_ms, 2),
        par10=par_score(records, timeout_ms, 10),
        rows=rows,
    )
