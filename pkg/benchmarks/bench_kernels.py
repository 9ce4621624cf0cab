"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py --sizes 4096 65536 --repeat 5
"""

import argparse
import timeit

import numpy as np

from partsort import _kernels


def _pairs(rng, n, key_range):
    keys = rng.integers(0, key_range, n, dtype=np.uint64)
    tags = rng.integers(0, 1 << 40, n, dtype=np.uint64)
    order = np.lexsort((tags, keys))
    return keys[order], tags[order]


def cases(n, p, n_probes, rng):
    keys, tags = _pairs(rng, n, 1 << 20)
    pk, pt = _pairs(rng, n_probes, 1 << 20)
    sizes = np.full(p, n // p)
    sizes[: n - sizes.sum()] += 1
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    seg_k, seg_t = keys.copy(), tags.copy()
    for a, b in zip(offsets[:-1], offsets[1:]):  # each segment sorted on its own
        o = np.lexsort((seg_t[a:b], seg_k[a:b]))
        seg_k[a:b], seg_t[a:b] = seg_k[a:b][o], seg_t[a:b][o]
    return {
        "lex_searchsorted": lambda impl: _kernels.lex_searchsorted(keys, tags, pk, pt, True, impl=impl),
        "seg_searchsorted": lambda impl: _kernels.seg_searchsorted(seg_k, seg_t, offsets, pk, pt, True,
                                                                   impl=impl),
        "merge_runs": lambda impl: _kernels.merge_runs(seg_k, seg_t, offsets, impl=impl),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[1 << 14, 1 << 18])
    ap.add_argument("--p", type=int, default=64, help="segments / runs")
    ap.add_argument("--probes", type=int, default=1024)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    backends = _kernels.available_backends()
    if "cython" not in backends:
        print("compiled backend not built; timing the fallback only")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<18}{'n':>9}" + "".join(f"{b + ' ms':>13}" for b in backends) + f"{'speedup':>10}")
    for n in args.sizes:
        for name, fn in cases(n, args.p, args.probes, rng).items():
            ref = None
            times = {}
            for b, impl in backends.items():
                out = fn(impl)
                if ref is not None and not np.array_equal(out, ref):
                    raise SystemExit(f"{name}: backends disagree")
                ref = out
                times[b] = min(timeit.repeat(lambda: fn(impl), number=1, repeat=args.repeat)) * 1e3
            speed = times["python"] / times["cython"] if "cython" in times else float("nan")
            print(f"{name:<18}{n:>9}" + "".join(f"{t:>13.3f}" for t in times.values()) + f"{speed:>9.1f}x")


if __name__ == "__main__":
    main()
