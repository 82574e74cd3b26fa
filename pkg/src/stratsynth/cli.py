"""Command-line front end: config loading, subcommands and report output."""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

from stratsynth.catalog import BUILTIN_LOGICS, TacticCatalog, builtin_catalog, load_catalog
from stratsynth.errors import BackendUnavailable, CatalogError, ConfigError, EmptySet, StageError
from stratsynth.evaluation import (
    EvalCache, EvalRecord, ExternalBackend, Instance, ScoreReport, SimulatedBackend, evaluate_set,
    extract_features, load_benchmarks, score,
)
from stratsynth.lang import canonical_key, parse, render
from stratsynth.staged import (
    PipelineConfig, PipelineResult, cached_eval, make_simulated_instances, run_stage1, run_stage2,
    select_portfolio, synthesize,
)

log = logging.getLogger("stratsynth")

EXIT_OK, EXIT_OTHER, EXIT_CONFIG, EXIT_BACKEND, EXIT_WRONG = 0, 1, 2, 3, 4


@dataclass
class Config:
    catalog: str
    benchmarks: list[str] = field(default_factory=list)
    backend: str = "external"
    solver_path: str = "z3"
    solver_command_template: str = "{solver_path} {file}"
    grace_ms: int = 250
    simulated_instances: int = 0
    timeout_ms: int = 10_000
    long_timeout_ms: Optional[int] = None
    n_linear: int = 20
    stage1_budget: int = 800
    stage2_budget: int = 300_000
    stage1_subset_size: int = 250
    c_uct: float = math.sqrt(2)
    c_bandit: float = math.sqrt(2)
    max_linear_len: int = 8
    max_if_depth: int = 3
    max_leaves: int = 8
    seed: int = 0
    workers: int = 1
    output_dir: str = "out"
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else self.base_dir / path


_POSITIVE = ("timeout_ms", "n_linear", "stage1_budget", "stage2_budget", "stage1_subset_size",
             "max_linear_len", "max_if_depth", "max_leaves", "workers")
_FIELDS = {f.name: f for f in dataclasses.fields(Config) if f.name != "base_dir"}


def _check_type(key, value, want):
    ok = {
        int: isinstance(value, int) and not isinstance(value, bool),
        float: isinstance(value, (int, float)) and not isinstance(value, bool),
        str: isinstance(value, str),
    }.get(want, True)
    if not ok:
        raise ConfigError(key, f"expected {want.__name__}, got {type(value).__name__}")


def config_from_dict(doc: dict, base_dir: Union[str, Path] = ".") -> Config:
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    for key in doc:
        if key not in _FIELDS:
            raise ConfigError(key, "unknown key")
    if "catalog" not in doc:
        raise ConfigError("catalog", "required")
    types = {"catalog": str, "backend": str, "solver_path": str, "solver_command_template": str,
             "output_dir": str, "c_uct": float, "c_bandit": float}
    for key, value in doc.items():
        if key == "benchmarks":
            if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
                raise ConfigError(key, "expected a list of paths")
        elif key == "long_timeout_ms":
            if value is not None:
                _check_type(key, value, int)
        else:
            _check_type(key, value, types.get(key, int))
    cfg = Config(**doc, base_dir=Path(base_dir))
    _validate(cfg)
    return cfg


def _validate(cfg: Config):
    for key in _POSITIVE:
        if getattr(cfg, key) <= 0:
            raise ConfigError(key, "must be positive")
    if cfg.long_timeout_ms is not None and cfg.long_timeout_ms <= 0:
        raise ConfigError("long_timeout_ms", "must be positive")
    if cfg.c_uct <= 0 or cfg.c_bandit <= 0:
        raise ConfigError("c_uct" if cfg.c_uct <= 0 else "c_bandit", "must be positive")
    if cfg.grace_ms < 0 or cfg.simulated_instances < 0:
        raise ConfigError("grace_ms" if cfg.grace_ms < 0 else "simulated_instances", "must be >= 0")
    if cfg.backend not in ("external", "simulated"):
        raise ConfigError("backend", "must be 'external' or 'simulated'")
    if not cfg.resolve(cfg.catalog).is_file() and cfg.catalog not in BUILTIN_LOGICS:
        raise ConfigError("catalog", f"{cfg.catalog!r} is neither a file nor one of {', '.join(BUILTIN_LOGICS)}")
    for i, b in enumerate(cfg.benchmarks):
        if not cfg.resolve(b).exists():
            raise ConfigError(f"benchmarks[{i}]", f"{b!r} does not exist")
    if not cfg.benchmarks and not (cfg.backend == "simulated" and cfg.simulated_instances > 0):
        raise ConfigError("benchmarks", "no benchmarks given (simulated runs may set simulated_instances)")
    if "{file}" not in cfg.solver_command_template:
        raise ConfigError("solver_command_template", "must contain {file}")


def load_config(path: Union[str, Path]) -> Config:
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError("<file>", f"{path} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON: {e}") from None
    return config_from_dict(doc, path.parent)


def config_to_dict(cfg: Config) -> dict:
    return {name: getattr(cfg, name) for name in _FIELDS}


def dump_config(cfg: Config) -> str:
    return json.dumps(config_to_dict(cfg), indent=2, sort_keys=True) + "\n"


# ---------------------------------------------------------------------------
# building runtime objects from a Config

def make_catalog(cfg: Config) -> TacticCatalog:
    p = cfg.resolve(cfg.catalog)
    return load_catalog(p) if p.is_file() else builtin_catalog(cfg.catalog)


def make_instances(cfg: Config) -> list[Instance]:
    if cfg.benchmarks:
        return load_benchmarks([cfg.resolve(b) for b in cfg.benchmarks])
    return make_simulated_instances(cfg.simulated_instances, cfg.seed)


def make_backend(cfg: Config):
    if cfg.backend == "simulated":
        return SimulatedBackend(seed=cfg.seed, horizon_ms=cfg.timeout_ms)
    return ExternalBackend(cfg.solver_path, cfg.solver_command_template, cfg.grace_ms, cfg.seed)


def make_pipeline(cfg: Config, instances: Optional[list[Instance]] = None) -> PipelineConfig:
    return PipelineConfig(
        training_set=instances if instances is not None else make_instances(cfg),
        catalog=make_catalog(cfg),
        n_linear=cfg.n_linear, stage1_budget=cfg.stage1_budget, stage2_budget=cfg.stage2_budget,
        timeout_ms=cfg.timeout_ms, long_timeout_ms=cfg.long_timeout_ms, seed=cfg.seed,
        c_uct=cfg.c_uct, c_bandit=cfg.c_bandit, workers=cfg.workers,
        max_linear_len=cfg.max_linear_len, max_if_depth=cfg.max_if_depth, max_leaves=cfg.max_leaves,
        stage1_subset_size=cfg.stage1_subset_size,
    )


# ---------------------------------------------------------------------------
# reports

@dataclass
class ErrorRow:
    name: str
    error: str

    def to_dict(self):
        return {"name": self.name, "error": self.error}


ReportRow = Union[ScoreReport, ErrorRow]


def score_or_error(name: str, records: Sequence[EvalRecord], instances: Sequence[Instance],
                   timeout_ms: int) -> ReportRow:
    try:
        return score(name, records, instances, timeout_ms)
    except EmptySet as e:
        return ErrorRow(name, f"EmptySet: {e}")


def _rows(result) -> list[ReportRow]:
    if isinstance(result, PipelineResult):
        return [result.final_report] + list(result.member_reports)
    if isinstance(result, (ScoreReport, ErrorRow)):
        return [result]
    return list(result)


def emit_report(result, fmt: str = "text") -> str:
    rows = _rows(result)
    if fmt == "json":
        doc = {"strategies": [r.to_dict() for r in rows]}
        if isinstance(result, PipelineResult):
            doc = result.report_dict()
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if fmt != "text":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = []
    for r in rows:
        if isinstance(r, ErrorRow):
            lines.append(f"{r.name}\n  error: {r.error}")
            continue
        lines.append(
            f"{r.name}\n  solved: {r.percentage:.1f}% ({r.correct_count}/{r.total})"
            f"  wrong: {r.wrong_count}  PAR-2: {r.par2:.3f}  PAR-10: {r.par10:.3f}"
        )
    return "\n".join(lines) + "\n"


def load_report(text: str) -> list[ReportRow]:
    doc = json.loads(text)
    return [ErrorRow(**d) if "error" in d else ScoreReport.from_dict(d) for d in doc["strategies"]]


def _any_wrong(rows: Sequence[ReportRow]) -> bool:
    return any(isinstance(r, ScoreReport) and r.wrong_count > 0 for r in rows)


# ---------------------------------------------------------------------------
# subcommands

def _read_strategies(path: Union[str, Path], catalog: Optional[TacticCatalog] = None):
    lines = [ln.strip() for ln in Path(path).read_text(encoding="utf-8").splitlines()]
    return [parse(ln, catalog) for ln in lines if ln and not ln.startswith(";")]


def _out_dir(cfg: Config) -> Path:
    out = cfg.resolve(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_strategies(path: Path, strategies):
    path.write_text("".join(render(s) + "\n" for s in strategies), encoding="utf-8")


def cmd_synth(cfg: Config, args) -> int:
    pipe = make_pipeline(cfg)
    backend = make_backend(cfg)
    result = synthesize(pipe, backend, out_dir=_out_dir(cfg))
    sys.stdout.write(emit_report(result, args.format))
    return EXIT_WRONG if _any_wrong(_rows(result)) else EXIT_OK


def cmd_stage1(cfg: Config, args) -> int:
    pipe = make_pipeline(cfg)
    out = _out_dir(cfg)
    pool, _ = run_stage1(pipe, make_backend(cfg), EvalCache(out / "cache.jsonl"))
    _write_strategies(out / "pool.txt", pool)
    print(f"{len(pool)} linear strategies written to {out / 'pool.txt'}")
    return EXIT_OK


def cmd_select(cfg: Config, args) -> int:
    pipe = make_pipeline(cfg)
    out = _out_dir(cfg)
    backend = make_backend(cfg)
    cache = EvalCache(out / "cache.jsonl")
    pool = _read_strategies(args.pool, pipe.catalog)
    for s in pool:
        evaluate_set(backend, s, pipe.stage1_subset, pipe.timeout_ms, cache, pipe.workers)
    portfolio = select_portfolio(pool, pipe.stage1_subset, cache, pipe.n_linear, pipe.timeout_ms)
    for t in {pipe.timeout_ms, pipe.target_timeout_ms}:
        for s in portfolio:
            evaluate_set(backend, s, pipe.training_set, t, cache, pipe.workers)
    _write_strategies(out / "portfolio.txt", portfolio)
    print(f"{len(portfolio)} strategies written to {out / 'portfolio.txt'}")
    return EXIT_OK


def cmd_stage2(cfg: Config, args) -> int:
    pipe = make_pipeline(cfg)
    out = _out_dir(cfg)
    cache = EvalCache(out / "cache.jsonl")
    portfolio = _read_strategies(args.portfolio, pipe.catalog)
    t = pipe.target_timeout_ms
    missing = any(cache.get(canonical_key(s), i.id, t) is None for s in portfolio for i in pipe.training_set)
    if missing:
        backend = make_backend(cfg)
        for s in portfolio:
            evaluate_set(backend, s, pipe.training_set, t, cache, pipe.workers)
    final = run_stage2(portfolio, pipe.training_set, cache, pipe)
    _write_strategies(out / "final_strategy.txt", [final])
    recs = [EvalRecord(canonical_key(final), i.id, t, *cached_eval(final, i, cache, t, portfolio), "cached", cfg.seed)
            for i in pipe.training_set]
    rows = [score(render(final), recs, pipe.training_set, t)]
    for s in portfolio:
        rows.append(score(render(s), [cache.get(canonical_key(s), i.id, t) for i in pipe.training_set],
                          pipe.training_set, t))
    text = emit_report(rows, "json")
    (out / "report.json").write_text(text, encoding="utf-8")
    sys.stdout.write(emit_report(rows, args.format))
    return EXIT_WRONG if _any_wrong(rows) else EXIT_OK


def cmd_eval(cfg: Config, args) -> int:
    catalog = make_catalog(cfg)
    instances = make_instances(cfg)
    backend = make_backend(cfg)
    out = _out_dir(cfg)
    cache = EvalCache(out / "cache.jsonl")
    t = args.timeout_ms or cfg.timeout_ms
    rows = []
    for s in _read_strategies(args.strategy, catalog):
        recs = evaluate_set(backend, s, instances, t, cache, cfg.workers)
        rows.append(score_or_error(render(s), recs, instances, t))
    (out / "eval_report.json").write_text(emit_report(rows, "json"), encoding="utf-8")
    sys.stdout.write(emit_report(rows, args.format))
    return EXIT_WRONG if _any_wrong(rows) else EXIT_OK


def cmd_features(cfg: Config, args) -> int:
    print(json.dumps(extract_features(args.instance), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_report(cfg: Optional[Config], args) -> int:
    cache = EvalCache(args.cache)
    expected = {}
    if cfg is not None:
        expected = {i.id: i for i in make_instances(cfg)}
    groups: dict[tuple[str, int], list[EvalRecord]] = {}
    for rec in cache:
        groups.setdefault((rec.strategy_key, rec.timeout_ms), []).append(rec)
    rows = []
    for (key, t), recs in sorted(groups.items()):
        recs.sort(key=lambda r: r.instance_id)
        insts = [expected.get(r.instance_id) or Instance(r.instance_id, None, "unknown", {}) for r in recs]
        rows.append(score_or_error(f"{key} @ {t}ms", recs, insts, t))
    sys.stdout.write(emit_report(rows, args.format))
    return EXIT_WRONG if _any_wrong(rows) else EXIT_OK


COMMANDS = {
    "synth": cmd_synth, "stage1": cmd_stage1, "select": cmd_select, "stage2": cmd_stage2,
    "eval": cmd_eval, "features": cmd_features, "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--workers", type=int, default=None, help="parallel solver runs")
    common.add_argument("--out", default=None, help="override output_dir")
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="stratsynth", description="Synthesize SMT solver strategies with staged MCTS.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help, config_required=True):
        p = sub.add_parser(name, parents=[common], help=help)
        p.add_argument("--config", required=config_required)
        return p

    add("synth", "full two-stage synthesis")
    add("stage1", "linear-strategy search only")
    add("select", "greedy portfolio selection").add_argument("--pool", required=True)
    add("stage2", "branched combination search").add_argument("--portfolio", required=True)
    p = add("eval", "evaluate strategies from a file")
    p.add_argument("--strategy", required=True)
    p.add_argument("--timeout-ms", type=int, default=None)
    add("features", "print probe values", config_required=False).add_argument("--instance", required=True)
    add("report", "summarize a cache file", config_required=False).add_argument("--cache", required=True)
    return ap


def _apply_overrides(cfg: Config, args) -> Config:
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if args.out is not None:
        changes["output_dir"] = str(Path(args.out).resolve())
    if not changes:
        return cfg
    cfg = dataclasses.replace(cfg, **changes)
    _validate(cfg)
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args) if args.config else None
        return COMMANDS[args.command](cfg, args)
    except (ConfigError, CatalogError, StageError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendUnavailable as e:
        print(f"backend unavailable: {e}", file=sys.stderr)
        return EXIT_BACKEND
    except Exception as e:  # noqa: BLE001 - top-level reporter
        log.debug("failure", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
