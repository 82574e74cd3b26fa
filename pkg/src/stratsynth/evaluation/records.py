"""Instances, evaluation records and the append-only JSONL cache."""
from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

from stratsynth.errors import CacheConflict

log = logging.getLogger(__name__)

RESULTS = ("sat", "unsat", "unknown", "timeout", "error")
SOLVED = frozenset({"sat", "unsat"})
STATUSES = ("sat", "unsat", "unknown")

FeatureMap = dict[str, Union[int, bool]]

RECORD_FIELDS = ("strategy_key", "instance_id", "timeout_ms", "result", "wall_ms", "backend_tag", "seed")


@dataclass
class Instance:
    id: str
    path: Optional[Path] = None
    expected_status: str = "unknown"
    features: Optional[FeatureMap] = field(default=None, compare=False)
    difficulty: float = 1.0

    def __post_init__(self):
        if self.expected_status not in STATUSES:
            raise ValueError(f"{self.id}: bad expected status {self.expected_status!r}")

    def feature_map(self) -> FeatureMap:
        """Features, extracted from the file on first use."""
        if self.features is None:
            if self.path is None:
                raise ValueError(f"instance {self.id} has neither features nor a file")
            from stratsynth.evaluation.features import extract_features
            self.features = extract_features(self)
        return self.features


@dataclass(frozen=True)
class EvalRecord:
    strategy_key: str
    instance_id: str
    timeout_ms: int
    result: str
    wall_ms: int
    backend_tag: str = ""
    seed: int = 0

    def __post_init__(self):
        if self.result not in RESULTS:
            raise ValueError(f"bad result {self.result!r}")
        if self.wall_ms < 0:
            raise ValueError("wall_ms must be >= 0")
        if self.result == "timeout" and self.wall_ms != self.timeout_ms:
            raise ValueError("timeout records must have wall_ms == timeout_ms")
        if self.result != "timeout" and self.wall_ms > self.timeout_ms:
            raise ValueError("wall_ms exceeds timeout_ms")

    @property
    def solved(self) -> bool:
        return self.result in SOLVED

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.strategy_key, self.instance_id, self.timeout_ms)

    def to_json(self) -> str:
        return json.dumps({k: getattr(self, k) for k in RECORD_FIELDS}, ensure_ascii=False)

    @classmethod
    def from_dict(cls, d: dict) -> "EvalRecord":
        extra = set(d) - set(RECORD_FIELDS)
        if extra:
            raise ValueError(f"unexpected record fields {sorted(extra)}")
        return cls(**d)


class EvalCache:
    """Keyed store of records, optionally backed by a JSONL file.

    Appends go through one lock; a key is never rewritten with a different
    record (``CacheConflict``).
    """

    def __init__(self, path: Union[str, Path, None] = None):
        self.path = Path(path) if path is not None else None
        self._records: dict[tuple[str, str, int], EvalRecord] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path, "rb") as fh:
            data = fh.read()
        lines = data.split(b"\n")
        offset = 0
        for n, raw in enumerate(lines):
            end = offset + len(raw) + 1
            if raw.strip():
                try:
                    rec = EvalRecord.from_dict(json.loads(raw.decode("utf-8")))
                except (ValueError, TypeError, UnicodeDecodeError):
                    if all(not rest.strip() for rest in lines[n + 1:]):
                        log.warning("truncating corrupt trailing line in %s", self.path)
                        with open(self.path, "r+b") as fh:
                            fh.truncate(offset)
                        break
                    raise ValueError(f"{self.path}: corrupt record on line {n + 1}")
                self._insert(rec, write=False)
            offset = end

    def _insert(self, rec: EvalRecord, write: bool) -> bool:
        old = self._records.get(rec.key)
        if old is not None:
            if old != rec:
                raise CacheConflict(f"conflicting records for {rec.key}: {old} vs {rec}")
            return False
        self._records[rec.key] = rec
        if write and self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(rec.to_json() + "\n")
        return True

    def add(self, rec: EvalRecord) -> bool:
        """Store ``rec``; returns False if an identical record was already there."""
        with self._lock:
            return self._insert(rec, write=True)

    def get(self, strategy_key: str, instance_id: str, timeout_ms: int) -> Optional[EvalRecord]:
        return self._records.get((strategy_key, instance_id, timeout_ms))

    def __contains__(self, key) -> bool:
        return key in self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[EvalRecord]:
        return iter(list(self._records.values()))


