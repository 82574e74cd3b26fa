"""Small synthesis run against a real z3 binary on the bundled smoke benchmarks.

    python scripts/z3_mini_synthesis.py --logic QF_BV --stage1-budget 20
"""
import argparse
import sys
import tempfile
import time
from pathlib import Path

from stratsynth.catalog import builtin_catalog
from stratsynth.cli import emit_report
from stratsynth.errors import BackendUnavailable
from stratsynth.evaluation import ExternalBackend, load_benchmarks
from stratsynth.lang import render
from stratsynth.staged import PipelineConfig, synthesize

SMOKE = Path(__file__).resolve().parents[1] / "benchmarks" / "smoke"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--logic", default="QF_BV", choices=sorted(p.name for p in SMOKE.iterdir() if p.is_dir()))
    ap.add_argument("--z3", default="z3")
    ap.add_argument("--n-linear", type=int, default=3)
    ap.add_argument("--stage1-budget", type=int, default=15)
    ap.add_argument("--stage2-budget", type=int, default=300)
    ap.add_argument("--timeout-ms", type=int, default=10_000)
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    try:
        backend = ExternalBackend(args.z3, seed=args.seed)
    except BackendUnavailable as e:
        print(f"skipping: {e}", file=sys.stderr)
        return 3
    instances = load_benchmarks([SMOKE / args.logic])
    cfg = PipelineConfig(instances, builtin_catalog(args.logic), n_linear=args.n_linear,
                         stage1_budget=args.stage1_budget, stage2_budget=args.stage2_budget,
                         timeout_ms=args.timeout_ms, seed=args.seed, workers=args.workers)
    out = args.out or tempfile.mkdtemp(prefix="stratsynth-z3-")
    t0 = time.perf_counter()
    res = synthesize(cfg, backend, out_dir=out)
    print(emit_report(res), end="")
    print(f"\nfinal: {render(res.final)}")
    print(f"{len(instances)} instances, {backend.calls} solver runs, {time.perf_counter() - t0:.1f}s, artifacts in {out}")
    return 4 if res.final_report.wrong_count else 0


if __name__ == "__main__":
    sys.exit(main())
