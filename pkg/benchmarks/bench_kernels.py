"""Compare the compiled kernels with the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Both backends are timed on the same inputs and their outputs compared.
"""

import argparse
import timeit

import numpy as np

from spikepop import _backend
from spikepop.infotheory import neighbour_terms


def lif_case(rng):
    lengths = np.full(400, 500)
    offsets = np.r_[0, np.cumsum(lengths)].astype(np.int64)
    x = rng.uniform(0, 1, offsets[-1])
    return (x, offsets, 0.9, 0.5)


def neighbour_case(rng, n=50_000, classes=32):
    x = rng.normal(size=n)
    labels = rng.integers(0, classes, n)
    order = np.lexsort((x, labels))
    xs = np.ascontiguousarray(x[order])
    ls = labels[order]
    first = np.r_[True, ls[1:] != ls[:-1]]
    block = np.cumsum(first) - 1
    starts = np.flatnonzero(first)
    stops = np.r_[starts[1:], n]
    return (xs, starts[block].astype(np.int64), stops[block].astype(np.int64), np.sort(xs), 3)


def bench(name, fn_name, args, repeat):
    rows = []
    outputs = {}
    for label, mod in (("compiled", _backend.compiled), ("python", _backend.fallback)):
        if mod is None:
            rows.append((label, None))
            continue
        fn = getattr(mod, fn_name)
        outputs[label] = fn(*args)
        best = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
        rows.append((label, best))
    same = None
    if len(outputs) == 2:
        a, b = outputs["compiled"], outputs["python"]
        if isinstance(a, tuple):
            same = all(np.array_equal(np.asarray(p), np.asarray(q)) for p, q in zip(a, b))
        else:
            same = np.array_equal(np.asarray(a), np.asarray(b))
    print(f"{name}:")
    for label, t in rows:
        print(f"  {label:9s} {'not built' if t is None else f'{t * 1e3:9.2f} ms'}")
    if rows[0][1] and rows[1][1]:
        print(f"  speed-up  {rows[1][1] / rows[0][1]:9.1f}x   identical output: {same}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"active backend: {_backend.BACKEND}")
    bench("LIF encoding, 400 x 500 samples", "lif_encode_flat", lif_case(rng), args.repeat)
    bench("neighbour counts, 50k samples / 32 classes", "neighbour_counts",
          neighbour_case(rng), args.repeat)
    # end to end, through whichever backend is active
    x = rng.uniform(size=20_000)
    t = min(timeit.repeat(lambda: neighbour_terms(x, rng.integers(0, 8, x.size)), number=1,
                          repeat=args.repeat))
    print(f"neighbour_terms end to end (20k samples, active backend): {t * 1e3:.2f} ms")


if __name__ == "__main__":
    main()
