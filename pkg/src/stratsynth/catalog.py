"""Per-logic tactic catalogs and the predicate pool used for branching."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from stratsynth.errors import CatalogError
from stratsynth.lang import BoolProbe, Compare, ParamValue, Predicate

# fractions of the evaluation timeout offered as try-for budgets when a
# catalog does not list its own
TRY_FOR_FRACTIONS = (1 / 16, 1 / 8, 1 / 4, 1 / 2)

SYNTH_OPERATORS = (">", "<=")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    candidates: tuple[ParamValue, ...]

    def __post_init__(self):
        if len(self.candidates) < 2:
            raise CatalogError(f"parameter {self.name!r} needs at least two candidates")


@dataclass(frozen=True)
class TacticSpec:
    name: str
    solver_wrapper: bool = False
    params: tuple[ParamSpec, ...] = ()

    @property
    def kind(self) -> str:
        return "solver_wrapper" if self.solver_wrapper else "preprocessing"


@dataclass(frozen=True)
class ProbeSpec:
    name: str
    kind: str  # "boolean" | "numeric"
    thresholds: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind == "boolean" and self.thresholds:
            raise CatalogError(f"boolean probe {self.name!r} cannot have thresholds")
        if self.kind == "numeric" and not self.thresholds:
            raise CatalogError(f"numeric probe {self.name!r} needs at least one threshold")
        if self.kind not in ("boolean", "numeric"):
            raise CatalogError(f"probe {self.name!r}: unknown kind {self.kind!r}")


@dataclass(frozen=True)
class TacticCatalog:
    logic: str
    tactics: tuple[TacticSpec, ...]
    probes: tuple[ProbeSpec, ...] = ()
    try_for_candidates: tuple[int, ...] = ()
    _by_name: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        names = [t.name for t in self.tactics]
        if len(set(names)) != len(names):
            raise CatalogError("duplicate tactic names")
        if not any(t.solver_wrapper for t in self.tactics):
            raise CatalogError(f"catalog {self.logic!r} has no solver-wrapper tactic")
        probe_names = [p.name for p in self.probes]
        if len(set(probe_names)) != len(probe_names):
            raise CatalogError("duplicate probe names")
        if any(ms <= 0 for ms in self.try_for_candidates):
            raise CatalogError("try-for candidates must be positive")
        object.__setattr__(self, "_by_name", {t.name: t for t in self.tactics})

    @property
    def tactic_names(self) -> dict:
        return self._by_name

    @property
    def probe_kinds(self) -> dict[str, str]:
        return {p.name: p.kind for p in self.probes}

    def tactic(self, name: str) -> TacticSpec:
        return self._by_name[name]

    def is_solver(self, name: str) -> bool:
        return self._by_name[name].solver_wrapper

    def has_param(self, tactic: str, param: str) -> bool:
        tactic_spec = self._by_name.get(tactic)
        return tactic_spec is not None and any(p.name == param for p in tactic_spec.params)

    @property
    def solvers(self) -> list[TacticSpec]:
        return [t for t in self.tactics if t.solver_wrapper]

    @property
    def preprocessors(self) -> list[TacticSpec]:
        return [t for t in self.tactics if not t.solver_wrapper]

    def try_for_ms(self, timeout_ms: int) -> tuple[int, ...]:
        """Try-for budgets for a given evaluation timeout."""
        if self.try_for_candidates:
            return self.try_for_candidates
        return default_try_for(timeout_ms)


def default_try_for(timeout_ms: int) -> tuple[int, ...]:
    return tuple(sorted({max(1, round(timeout_ms * f)) for f in TRY_FOR_FRACTIONS}))


def predicate_pool(catalog: TacticCatalog) -> list[Predicate]:
    """Boolean probes, then numeric probe x threshold x {>, <=}."""
    out: list[Predicate] = [BoolProbe(p.name) for p in catalog.probes if p.kind == "boolean"]
    for p in catalog.probes:
        if p.kind != "numeric":
            continue
        for c in p.thresholds:
            for op in SYNTH_OPERATORS:
                out.append(Compare(op, p.name, c))
    return out


def _param_from_json(d: dict) -> ParamSpec | None:
    cands = list(d["candidates"])
    if cands and all(isinstance(c, bool) for c in cands):
        cands = [True, False]
    elif any(isinstance(c, bool) for c in cands) or not all(isinstance(c, int) for c in cands):
        raise CatalogError(f"parameter {d['name']!r}: candidates must be all booleans or all integers")
    # de-duplicate, keep order
    seen = []
    for c in cands:
        if c not in seen:
            seen.append(c)
    if len(seen) < 2:
        return None
    return ParamSpec(d["name"], tuple(seen))


def catalog_from_dict(doc: dict) -> TacticCatalog:
    try:
        tactics = []
        for t in doc["tactics"]:
            params = tuple(p for p in (_param_from_json(x) for x in t.get("params", [])) if p is not None)
            tactics.append(TacticSpec(t["name"], bool(t.get("solver_wrapper", False)), params))
        probes = tuple(
            ProbeSpec(p["name"], p["kind"], tuple(int(x) for x in p.get("thresholds", [])))
            for p in doc.get("probes", [])
        )
        return TacticCatalog(doc["logic"], tuple(tactics), probes, tuple(int(x) for x in doc.get("try_for_ms", [])))
    except KeyError as e:
        raise CatalogError(f"catalog is missing key {e.args[0]!r}") from None


def catalog_to_dict(cat: TacticCatalog) -> dict:
    return {
        "logic": cat.logic,
        "tactics": [
            {"name": t.name, "solver_wrapper": t.solver_wrapper,
             "params": [{"name": p.name, "candidates": list(p.candidates)} for p in t.params]}
            for t in cat.tactics
        ],
        "probes": [{"name": p.name, "kind": p.kind, "thresholds": list(p.thresholds)} for p in cat.probes],
        "try_for_ms": list(cat.try_for_candidates),
    }


def load_catalog(path: str | Path) -> TacticCatalog:
    with open(path, encoding="utf-8") as fh:
        return catalog_from_dict(json.load(fh))


BUILTIN_LOGICS = ("QF_BV", "QF_NIA", "QF_NRA", "QF_LIA", "QF_LRA", "QF_S")


def builtin_catalog(logic: str) -> TacticCatalog:
    if logic not in BUILTIN_LOGICS:
        raise CatalogError(f"no shipped catalog for {logic!r}; have {', '.join(BUILTIN_LOGICS)}")
    text = resources.files("stratsynth").joinpath("catalogs", f"{logic}.json").read_text(encoding="utf-8")
    return catalog_from_dict(json.loads(text))
