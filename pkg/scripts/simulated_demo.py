"""Run the full two-stage synthesis against the simulated solver and print the outcome.

Handy for poking at search settings without a solver binary:

    python scripts/simulated_demo.py --instances 60 --stage2-budget 20000 --affinity
"""
import argparse
import tempfile
import time

from stratsynth.catalog import builtin_catalog
from stratsynth.cli import emit_report
from stratsynth.evaluation import SimulatedBackend
from stratsynth.lang import render
from stratsynth.staged import PipelineConfig, make_simulated_instances, synthesize


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--logic", default="QF_NIA")
    ap.add_argument("--instances", type=int, default=40)
    ap.add_argument("--n-linear", type=int, default=4)
    ap.add_argument("--stage1-budget", type=int, default=200)
    ap.add_argument("--stage2-budget", type=int, default=5000)
    ap.add_argument("--timeout-ms", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--affinity", action="store_true",
                    help="strategies only solve one side of is-pb, so an if split should win")
    ap.add_argument("--out", default=None, help="artifact directory (default: a temp dir)")
    args = ap.parse_args()

    instances = make_simulated_instances(args.instances, seed=args.seed)
    backend = SimulatedBackend(seed=args.seed, horizon_ms=args.timeout_ms,
                               affinity_probe="is-pb" if args.affinity else None)
    cfg = PipelineConfig(instances, builtin_catalog(args.logic), n_linear=args.n_linear,
                         stage1_budget=args.stage1_budget, stage2_budget=args.stage2_budget,
                         timeout_ms=args.timeout_ms, seed=args.seed)
    out = args.out or tempfile.mkdtemp(prefix="stratsynth-demo-")
    t0 = time.perf_counter()
    res = synthesize(cfg, backend, out_dir=out)
    print(emit_report(res), end="")
    print(f"\nfinal: {render(res.final)}")
    print(f"stage timings (s): " + ", ".join(f"{k}={v:.2f}" for k, v in res.timings.items()))
    print(f"backend calls: {res.backend_calls}  total {time.perf_counter() - t0:.1f}s  artifacts in {out}")


if __name__ == "__main__":
    main()
