#!/usr/bin/env python3
"""Time forest training at production scale (250 trees, 128-row subsamples, ~50k rows)."""

import argparse
import sys
import time

import numpy as np

from probfcast.error_model import ErrorSample, ErrorTable
from probfcast.qrf import ForestConfig, train


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=50_000)
    ap.add_argument("--trees", type=int, default=250)
    ap.add_argument("--sample-count", type=int, default=128)
    ap.add_argument("--labels", type=int, default=18)
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    leads = rng.integers(0, 169, size=args.rows)
    labels = [f"m{int(i)}" for i in rng.integers(0, args.labels, size=args.rows)]
    errors = rng.normal(0.0, 1.0 + leads / 84.0)
    table = ErrorTable.from_samples(
        ErrorSample(int(t), lab, float(e)) for t, lab, e in zip(leads, labels, errors)
    )

    times = []
    for rep in range(args.repeats):
        config = ForestConfig(
            num_trees=args.trees, sample_count=args.sample_count, seed=args.seed + rep
        )
        t0 = time.perf_counter()
        train(table, config)
        times.append(time.perf_counter() - t0)
        print(f"run {rep}: {times[-1]:.2f}s")
    print(
        f"{args.trees} trees x {args.sample_count}-row subsamples on {args.rows} rows: "
        f"best {min(times):.2f}s, mean {np.mean(times):.2f}s"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
