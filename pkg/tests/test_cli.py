import json
import math
import stat

import pytest

from stratsynth.cli import (
    Config, ErrorRow, config_from_dict, config_to_dict, dump_config, emit_report, load_config, load_report, main,
    score_or_error,
)
from stratsynth.errors import ConfigError
from stratsynth.evaluation import EvalRecord, Instance, ScoreReport
from stratsynth.lang import canonical_key, parse, render


def write_config(tmp_path, **doc):
    doc.setdefault("catalog", "QF_BV")
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(doc))
    return path


def sim_config(tmp_path, **extra):
    base = dict(backend="simulated", simulated_instances=12, n_linear=3, stage1_budget=25, stage2_budget=150,
                stage1_subset_size=8, output_dir="out")
    base.update(extra)
    return write_config(tmp_path, **base)


# --- config --------------------------------------------------------------------

def test_load_config_defaults(tmp_path):
    (tmp_path / "bench").mkdir()
    cfg = load_config(write_config(tmp_path, benchmarks=["bench"]))
    assert (cfg.timeout_ms, cfg.n_linear, cfg.stage1_budget, cfg.stage2_budget) == (10_000, 20, 800, 300_000)
    assert cfg.c_uct == cfg.c_bandit == pytest.approx(math.sqrt(2))
    assert cfg.seed == 0 and cfg.workers == 1 and cfg.long_timeout_ms is None
    assert cfg.resolve("bench") == tmp_path / "bench"


@pytest.mark.parametrize("doc,key", [
    ({"timeout_ms": 0}, "timeout_ms"),
    ({"foo": 1}, "foo"),
    ({"stage2_budget": "many"}, "stage2_budget"),
    ({"backend": "carrier-pigeon"}, "backend"),
    ({"catalog": "QF_NOPE"}, "catalog"),
    ({"benchmarks": ["missing-dir"]}, "benchmarks[0]"),
    ({"solver_command_template": "{solver_path}"}, "solver_command_template"),
    ({"c_uct": -1.0}, "c_uct"),
])
def test_bad_config_names_the_key(tmp_path, doc, key):
    doc = {"catalog": "QF_BV", "backend": "simulated", "simulated_instances": 3, **doc}
    with pytest.raises(ConfigError) as err:
        config_from_dict(doc, tmp_path)
    assert err.value.key == key


def test_benchmarks_required_for_external_backend(tmp_path):
    with pytest.raises(ConfigError) as err:
        config_from_dict({"catalog": "QF_BV"}, tmp_path)
    assert err.value.key == "benchmarks"


def test_missing_or_broken_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(bad)


def test_dump_load_fixed_point(tmp_path):
    cfg = config_from_dict({"catalog": "QF_NIA", "backend": "simulated", "simulated_instances": 5,
                            "long_timeout_ms": 60_000, "seed": 9}, tmp_path)
    text = dump_config(cfg)
    path = tmp_path / "again.json"
    path.write_text(text)
    again = load_config(path)
    assert again == cfg and dump_config(again) == text
    assert set(config_to_dict(cfg)) == {f for f in Config.__dataclass_fields__ if f != "base_dir"}


# --- reports ---------------------------------------------------------------------

def test_emit_report_text():
    insts = [Instance("a", None, "sat"), Instance("b", None, "unsat")]
    recs = [EvalRecord("k", "a", 1000, "sat", 500), EvalRecord("k", "b", 1000, "timeout", 1000)]
    text = emit_report(score_or_error("smt", recs, insts, 1000))
    assert text.startswith("smt\n  solved: 50.0% (1/2)")
    # PAR-10 oracle: (0.5 + 10 * 1) / 2
    assert "PAR-10: 5.250" in text and "PAR-2: 1.250" in text


def test_empty_set_becomes_error_row():
    row = score_or_error("nothing", [], [], 1000)
    assert isinstance(row, ErrorRow) and row.error.startswith("EmptySet")
    assert "error: EmptySet" in emit_report([row])


def test_json_report_round_trip():
    insts = [Instance("a", None, "sat")]
    rows = [score_or_error("smt", [EvalRecord("k", "a", 1000, "sat", 10)], insts, 1000), ErrorRow("x", "EmptySet: y")]
    back = load_report(emit_report(rows, "json"))
    assert isinstance(back[0], ScoreReport) and back[0].to_dict() == rows[0].to_dict()
    assert back[1] == rows[1]


# --- main / subcommands --------------------------------------------------------------

def test_exit_code_config_error(tmp_path, capsys):
    path = write_config(tmp_path, timeout_ms=0, backend="simulated", simulated_instances=3)
    assert main(["synth", "--config", str(path)]) == 2
    assert "timeout_ms" in capsys.readouterr().err


def test_exit_code_backend_unavailable(tmp_path):
    (tmp_path / "b").mkdir()
    (tmp_path / "b" / "x.smt2").write_text("(set-info :status sat)\n(check-sat)\n")
    path = write_config(tmp_path, benchmarks=["b"], solver_path="/nonexistent/z3")
    assert main(["eval", "--config", str(path), "--strategy", str(tmp_path / "s.txt")]) == 3


def lying_solver(tmp_path):
    script = tmp_path / "liar.sh"
    script.write_text("#!/bin/sh\necho sat\n")
    script.chmod(script.stat().st_mode | stat.S_IXUSR)
    return script


def test_exit_code_wrong_answer(tmp_path, capsys):
    (tmp_path / "b").mkdir()
    (tmp_path / "b" / "u.smt2").write_text("(set-info :status unsat)\n(declare-const x Bool)\n"
                                           "(assert (and x (not x)))\n(check-sat)\n")
    (tmp_path / "s.txt").write_text("smt\n")
    path = write_config(tmp_path, benchmarks=["b"], solver_path=str(lying_solver(tmp_path)))
    assert main(["eval", "--config", str(path), "--strategy", str(tmp_path / "s.txt"), "--timeout-ms", "2000"]) == 4
    assert "wrong: 1" in capsys.readouterr().out
    report = json.loads((tmp_path / "out" / "eval_report.json").read_text())
    assert report["strategies"][0]["wrong_count"] == 1


def test_synth_replay_is_byte_identical(tmp_path, capsys):
    path = sim_config(tmp_path)
    assert main(["synth", "--config", str(path), "--out", str(tmp_path / "r1")]) == 0
    assert main(["synth", "--config", str(path), "--out", str(tmp_path / "r2")]) == 0
    first = (tmp_path / "r1" / "report.json").read_bytes()
    assert first == (tmp_path / "r2" / "report.json").read_bytes()
    assert (tmp_path / "r1" / "final_strategy.txt").read_text() == (tmp_path / "r2" / "final_strategy.txt").read_text()
    out = capsys.readouterr().out
    assert "solved:" in out


def test_synth_json_format(tmp_path, capsys):
    path = sim_config(tmp_path)
    assert main(["synth", "--config", str(path), "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert canonical_key(parse(doc["strategies"][0]["name"])) == doc["final"]
    assert doc == json.loads((tmp_path / "out" / "report.json").read_text())


def test_stagewise_commands(tmp_path, capsys):
    path = sim_config(tmp_path)
    assert main(["stage1", "--config", str(path)]) == 0
    pool = (tmp_path / "out" / "pool.txt").read_text().splitlines()
    assert 1 <= len(pool) <= 25
    assert main(["select", "--config", str(path), "--pool", str(tmp_path / "out" / "pool.txt")]) == 0
    portfolio = (tmp_path / "out" / "portfolio.txt").read_text().splitlines()
    assert 1 <= len(portfolio) <= 3 and set(portfolio) <= set(pool)
    assert main(["stage2", "--config", str(path), "--portfolio", str(tmp_path / "out" / "portfolio.txt")]) == 0
    final = parse((tmp_path / "out" / "final_strategy.txt").read_text().strip())
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    rows = report["strategies"]
    assert rows[0]["name"] == render(final)
    assert rows[0]["par10"] <= min(r["par10"] for r in rows[1:]) + 1e-9


def test_eval_with_simulated_backend(tmp_path, capsys):
    path = sim_config(tmp_path)
    (tmp_path / "s.txt").write_text("; comment line\n(then simplify sat)\nsmt\n")
    assert main(["eval", "--config", str(path), "--strategy", str(tmp_path / "s.txt")]) == 0
    report = json.loads((tmp_path / "out" / "eval_report.json").read_text())
    assert [r["name"] for r in report["strategies"]] == ["(then simplify sat)", "smt"]
    assert all(r["total"] == 12 for r in report["strategies"])


def test_seed_override_changes_run(tmp_path):
    path = sim_config(tmp_path)
    main(["synth", "--config", str(path), "--out", str(tmp_path / "a")])
    main(["synth", "--config", str(path), "--out", str(tmp_path / "b"), "--seed", "7"])
    ma = json.loads((tmp_path / "a" / "manifest.json").read_text())
    mb = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert ma["seeds"]["stage1"] == 0 and mb["seeds"]["stage1"] == 7


def test_features_command(tmp_path, capsys):
    f = tmp_path / "x.smt2"
    f.write_text("(declare-const a Int)\n(assert (> (+ a 1) 2))\n(check-sat)\n")
    assert main(["features", "--instance", str(f)]) == 0
    feats = json.loads(capsys.readouterr().out)
    assert feats["num-consts"] == 1 and feats["is-pb"] is False


def test_report_command_groups_cache(tmp_path, capsys):
    path = sim_config(tmp_path)
    (tmp_path / "s.txt").write_text("smt\nsat\n")
    main(["eval", "--config", str(path), "--strategy", str(tmp_path / "s.txt")])
    capsys.readouterr()
    assert main(["report", "--cache", str(tmp_path / "out" / "cache.jsonl"), "--config", str(path)]) == 0
    out = capsys.readouterr().out
    assert "smt @ 10000ms" in out and "sat @ 10000ms" in out
    assert out.count("/12)") == 2
