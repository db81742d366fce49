"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--cases 2000]

Both backends run on the same random question pairs; results are checked
for equality before any timing is reported.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from kwmatch import _kernels_py as pure

try:
    from kwmatch import _kernels as compiled
except ImportError:
    compiled = None


def make_cases(n_cases: int, seed: int = 0):
    rng = np.random.default_rng(seed)
    cases = []
    for _ in range(n_cases):
        nq, nd = (int(x) for x in rng.integers(1, 16, size=2))
        vocab = int(rng.integers(2, 30))
        cases.append(dict(
            wq=rng.random(nq), wd=rng.random(nd),
            q_ids=rng.integers(0, vocab, nq).astype(np.int64),
            d_ids=rng.integers(0, vocab, nd).astype(np.int64),
            idf=rng.random(vocab) * 5 + 1,
            avgdl=float(rng.uniform(3, 10)),
        ))
    return cases


def run_all(mod, cases, uncached_pairs):
    out = []
    for c in cases:
        rq = mod.removal_ranks(c["wq"])
        rd = mod.removal_ranks(c["wd"])
        pairs = uncached_pairs(len(rq), len(rd))
        out.append(mod.lexical_features(c["q_ids"], rq, c["d_ids"], rd, pairs, c["idf"], c["avgdl"]))
    return out


def _pure_pairs(nq, nd):
    return np.array(pure._pairs.__wrapped__(nq, nd), dtype=np.int64).reshape(-1, 2)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--cases", type=int, default=2000)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`", file=sys.stderr)
        return 1
    cases = make_cases(args.cases)
    a = run_all(pure, cases, _pure_pairs)
    b = run_all(compiled, cases, compiled.comparable_pairs)
    for x, y in zip(a, b):
        for u, v in zip(x, y):
            if not np.array_equal(u, v):
                print("backends disagree", file=sys.stderr)
                return 1
    benches = {
        "removal_ranks": (lambda: [pure.removal_ranks(c["wq"]) for c in cases],
                          lambda: [compiled.removal_ranks(c["wq"]) for c in cases]),
        "comparable_pairs": (lambda: [_pure_pairs(len(c["wq"]), len(c["wd"])) for c in cases],
                             lambda: [compiled.comparable_pairs(len(c["wq"]), len(c["wd"])) for c in cases]),
        "full pairing + lexical": (lambda: run_all(pure, cases, _pure_pairs),
                                   lambda: run_all(compiled, cases, compiled.comparable_pairs)),
    }
    rows = []
    for name, (py_fn, cy_fn) in benches.items():
        t_py = min(timeit.repeat(py_fn, number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(cy_fn, number=1, repeat=args.repeat))
        rows.append((name, t_py, t_cy))
    print(f"{args.cases} random question pairs, best of {args.repeat}")
    print(f"{'kernel':<24}{'python (ms)':>12}{'cython (ms)':>12}{'speedup':>9}")
    for name, t_py, t_cy in rows:
        print(f"{name:<24}{1e3 * t_py:>12.2f}{1e3 * t_cy:>12.2f}{t_py / t_cy:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
