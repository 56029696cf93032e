"""Compiled vs pure-Python lane kernels.

Each backend runs in its own interpreter (``DSPSIM_PURE`` picks the
backend at import time). Two workloads are timed: direct calls into the
lane kernels, and whole-kernel simulations that lean on them.

    python benchmarks/bench_kernels.py [--repeat 3] [--calls 200000]
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, random, sys, time
from dspsim import lanes
from dspsim.bench.kernels import KernelSpec
from dspsim.bench.suite import run_kernel

calls, repeat = int(sys.argv[1]), int(sys.argv[2])
rng = random.Random(0)
ops = [(rng.getrandbits(32), rng.getrandbits(32), rng.getrandbits(32)) for _ in range(calls)]


def direct():
    for a, b, c in ops:
        lanes.vec_alu(0, a, b, 8)
        lanes.dotp(a, b, c, 8, True)
        lanes.shuffle(a, b, c, 8)
        lanes.add_rn(a, b, 5, False, False)


def sims():
    for name, t in (("conv5x5", "i8"), ("matmul", "i16")):
        run_kernel(KernelSpec(name, t, (), "builtin"))


out = {"backend": lanes.BACKEND}
for label, fn in (("lane calls", direct), ("kernel sims", sims)):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    out[label] = best
print(json.dumps(out))
"""


def measure(pure: bool, calls: int, repeat: int) -> dict:
    env = dict(os.environ, DSPSIM_PURE="1" if pure else "0")
    res = subprocess.run([sys.executable, "-c", CHILD, str(calls), str(repeat)], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--calls", type=int, default=200_000)
    args = ap.parse_args(argv)
    fast = measure(False, args.calls, args.repeat)
    slow = measure(True, args.calls, args.repeat)
    if fast["backend"] != "cython":
        print("compiled kernels are not built; both columns use the Python backend")
    print(f"{'workload':<14}{fast['backend']:>10}{'python':>10}{'ratio':>8}")
    for k in ("lane calls", "kernel sims"):
        print(f"{k:<14}{fast[k]:>9.3f}s{slow[k]:>9.3f}s{slow[k] / fast[k]:>7.2f}x")


if __name__ == "__main__":
    main()
