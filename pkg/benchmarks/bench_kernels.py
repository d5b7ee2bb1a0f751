"""Time the numba kernels against the pure-numpy fallback.

Each path runs in a fresh interpreter so the environment flag is honoured at
import time.  Usage: ``python3 benchmarks/bench_kernels.py [--rounds N]``.
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from bellbattery import _accel, behaviors as bh
from bellbattery.certifier import clopper_pearson_lower
from bellbattery.games import local_value, make_chained, make_chsh
from bellbattery.transducer import simulate

rounds = int(sys.argv[1])
repeats = int(sys.argv[2])

def best(fn):
    fn()  # warm-up (JIT compile or cache load)
    times = []
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)

game, box = make_chsh(), bh.tsirelson_chsh()
chained = make_chained(8)
k = np.arange(201)
out = {
    "numba": _accel.USE_NUMBA,
    "simulate": best(lambda: simulate(game, box, rounds, seed=1)),
    "local_enumeration_chained8": best(lambda: local_value(chained)),
    "clopper_pearson_n200": best(lambda: clopper_pearson_lower(k, 200, 0.01)),
}
print(json.dumps(out))
"""


def run(disable: bool, rounds: int, repeats: int) -> dict:
    env = dict(os.environ)
    if disable:
        env["BELLBATTERY_DISABLE_NUMBA"] = "1"
    else:
        env.pop("BELLBATTERY_DISABLE_NUMBA", None)
    res = subprocess.run(
        [sys.executable, "-c", WORKER, str(rounds), str(repeats)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(res.stdout)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=10**6)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args(argv)
    jit = run(False, args.rounds, args.repeats)
    ref = run(True, args.rounds, args.repeats)
    if not jit["numba"]:
        print("numba unavailable; both columns use numpy")
    print(f"{'kernel':32s} {'numba [s]':>10s} {'numpy [s]':>10s} {'ratio':>7s}")
    for name in ("simulate", "local_enumeration_chained8", "clopper_pearson_n200"):
        print(f"{name:32s} {jit[name]:10.4f} {ref[name]:10.4f} {ref[name] / jit[name]:7.2f}")


if __name__ == "__main__":
    main()
