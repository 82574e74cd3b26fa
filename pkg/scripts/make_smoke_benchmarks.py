"""Generate the small bundled SMT-LIB instances under benchmarks/smoke.

Every instance's status is known by construction (a witness for sat, a
simple argument for unsat).  Pass --check to confirm each status with a z3
binary on PATH.
"""
import argparse
import random
import shutil
import subprocess
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent / "benchmarks" / "smoke"


def header(logic, status):
    return f"(set-info :smt-lib-version 2.6)\n(set-logic {logic})\n(set-info :status {status})\n"


def bv(v, w):
    return f"(_ bv{v % (1 << w)} {w})"


def bv_factor(rng, w):
    a, b = rng.randrange(3, 1 << (w // 2)), rng.randrange(3, 1 << (w // 2))
    return header("QF_BV", "sat") + (
        f"(declare-const x (_ BitVec {w}))\n(declare-const y (_ BitVec {w}))\n"
        f"(assert (= (bvmul x y) {bv(a * b, w)}))\n"
        f"(assert (bvugt x {bv(1, w)}))\n(assert (bvugt y {bv(1, w)}))\n"
        f"(assert (bvult x {bv(1 << (w // 2), w)}))\n(assert (bvult y {bv(1 << (w // 2), w)}))\n"
        "(check-sat)\n(exit)\n"
    )


def bv_even_odd(rng, w):
    k = rng.randrange(1, 8)
    return header("QF_BV", "unsat") + (
        f"(declare-const x (_ BitVec {w}))\n"
        f"(assert (= ((_ extract 0 0) (bvmul x {bv(2 * k, w)})) #b1))\n"
        "(check-sat)\n(exit)\n"
    )


def bv_cycle(rng, w, n):
    names = [f"v{i}" for i in range(n)]
    decls = "".join(f"(declare-const {v} (_ BitVec {w}))\n" for v in names)
    chain = "".join(f"(assert (bvult {names[i]} {names[(i + 1) % n]}))\n" for i in range(n))
    return header("QF_BV", "unsat") + decls + chain + "(check-sat)\n(exit)\n"


def bv_linear(rng, w, n):
    vals = [rng.randrange(0, 1 << w) for _ in range(n)]
    names = [f"a{i}" for i in range(n)]
    decls = "".join(f"(declare-fun {v} () (_ BitVec {w}))\n" for v in names)
    body = ""
    for _ in range(n):
        coef = [rng.randrange(1, 16) for _ in range(n)]
        lhs = " ".join(f"(bvmul {bv(c, w)} {v})" for c, v in zip(coef, names))
        rhs = sum(c * x for c, x in zip(coef, vals))
        body += f"(assert (= (bvadd {lhs}) {bv(rhs, w)}))\n"
    return header("QF_BV", "sat") + decls + body + "(check-sat)\n(exit)\n"


def bv_shift(rng, w):
    s = rng.randrange(1, w)
    return header("QF_BV", "unsat") + (
        f"(declare-const x (_ BitVec {w}))\n"
        f"(assert (not (= (bvshl (bvlshr x {bv(s, w)}) {bv(s, w)}) (bvand x (bvnot {bv((1 << s) - 1, w)})))))\n"
        "(check-sat)\n(exit)\n"
    )


def lia_sat(rng):
    x, y = rng.randrange(-50, 50), rng.randrange(-50, 50)
    return header("QF_LIA", "sat") + (
        "(declare-fun x () Int)\n(declare-fun y () Int)\n"
        f"(assert (= (+ (* 3 x) (* 5 y)) {3 * x + 5 * y}))\n"
        f"(assert (<= x {x}))\n(assert (>= x {x - 3}))\n(check-sat)\n(exit)\n"
    )


def lia_unsat(rng):
    c = 2 * rng.randrange(1, 50) + 1
    return header("QF_LIA", "unsat") + (
        "(declare-fun x () Int)\n(declare-fun y () Int)\n"
        f"(assert (= (+ (* 2 x) (* 4 y)) {c}))\n(check-sat)\n(exit)\n"
    )


def nia_sat(rng):
    a, b = rng.randrange(2, 40), rng.randrange(2, 40)
    return header("QF_NIA", "sat") + (
        "(declare-fun x () Int)\n(declare-fun y () Int)\n"
        f"(assert (= (* x y) {a * b}))\n(assert (> x 1))\n(assert (> y 1))\n(check-sat)\n(exit)\n"
    )


def nia_unsat(rng):
    return header("QF_NIA", "unsat") + (
        "(declare-fun x () Int)\n"
        f"(assert (< (* x x) {-rng.randrange(1, 100)}))\n(check-sat)\n(exit)\n"
    )


def build(seed: int):
    rng = random.Random(seed)
    files = {}
    for i in range(6):
        files[f"QF_BV/factor_{i:02d}.smt2"] = bv_factor(rng, rng.choice([8, 12, 16, 20]))
    for i in range(4):
        files[f"QF_BV/parity_{i:02d}.smt2"] = bv_even_odd(rng, rng.choice([8, 16, 32]))
    for i in range(4):
        files[f"QF_BV/cycle_{i:02d}.smt2"] = bv_cycle(rng, rng.choice([8, 16]), rng.randrange(3, 9))
    for i in range(6):
        files[f"QF_BV/linear_{i:02d}.smt2"] = bv_linear(rng, rng.choice([8, 16]), rng.randrange(2, 5))
    for i in range(4):
        files[f"QF_BV/shift_{i:02d}.smt2"] = bv_shift(rng, rng.choice([8, 16, 32]))
    for i in range(2):
        files[f"QF_LIA/lia_sat_{i:02d}.smt2"] = lia_sat(rng)
        files[f"QF_LIA/lia_unsat_{i:02d}.smt2"] = lia_unsat(rng)
        files[f"QF_NIA/nia_sat_{i:02d}.smt2"] = nia_sat(rng)
        files[f"QF_NIA/nia_unsat_{i:02d}.smt2"] = nia_unsat(rng)
    return files


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--out", type=Path, default=ROOT)
    ap.add_argument("--check", action="store_true", help="confirm statuses with z3")
    args = ap.parse_args()
    z3 = shutil.which("z3") if args.check else None
    if args.check and z3 is None:
        raise SystemExit("--check needs a z3 binary on PATH")
    for rel, text in build(args.seed).items():
        path = args.out / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
        if z3:
            got = subprocess.run([z3, "-T:20", str(path)], capture_output=True, text=True).stdout.split()[0]
            want = text.split(":status ")[1].split(")")[0]
            flag = "ok" if got == want else "MISMATCH"
            print(f"{flag:8s} {rel}: expected {want}, z3 says {got}")
            if got != want:
                raise SystemExit(1)
    print(f"wrote {len(build(args.seed))} instances under {args.out}")


if __name__ == "__main__":
    main()
