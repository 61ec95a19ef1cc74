"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--rounds N] [--repeat K]
"""
import argparse
import timeit

import numpy as np

from diqkd import _backend, _fallback, qmat
from diqkd.attack import build_optimal_attack
from diqkd.simproto import ProtocolConfig, _cumulative, outcome_tables, round_words


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=1_000_000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = _backend.available_backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the fallback is timed")

    rng = np.random.default_rng(0)
    mats = {n: qmat.random_density(n, rng) for n in (4, 8, 16, 32)}
    att = build_optimal_attack(2.5, 0.05)
    cfg = ProtocolConfig(args.rounds)
    words = round_words(0, 0, args.rounds)
    ca, cb = _cumulative(cfg.setting_probs_alice), _cumulative(cfg.setting_probs_bob)
    tables = outcome_tables(att)

    rows = []
    for n, m in mats.items():
        times = {name: bench(lambda k=k: k.jacobi_eigh(m), args.repeat) for name, k in backends.items()}
        rows.append((f"jacobi_eigh n={n}", times))
    times = {
        name: bench(lambda k=k: k.sample_rounds(words, ca, cb, tables, 0.5), args.repeat)
        for name, k in backends.items()
    }
    rows.append((f"sample_rounds n={args.rounds}", times))

    print(f"{'kernel':<28}{'python [s]':>12}{'compiled [s]':>14}{'speedup':>10}")
    for label, t in rows:
        py = t[_fallback.NAME]
        cc = t.get("compiled")
        if cc is None:
            print(f"{label:<28}{py:12.5f}{'-':>14}{'-':>10}")
        else:
            print(f"{label:<28}{py:12.5f}{cc:14.5f}{py / cc:9.1f}x")


if __name__ == "__main__":
    main()
