#!/usr/bin/env python3
"""Full-scale backtest: synthesize a dataset, run the scenario harness, print a summary.

Defaults mirror the headline experiment (200 scenarios, 14-day training
windows, 168h horizon) on a 90-day synthetic dataset.  Reports land in the
output directory as CSVs via the CLI writer path.
"""

import argparse
import sys
import time
from pathlib import Path

from probfcast.cli import main as cli_main
from probfcast.ingest import write_forecasts, write_observations
from probfcast.synth import SynthConfig, synthesize_dataset


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="full_eval_out", help="report directory")
    ap.add_argument("--span-days", type=int, default=90)
    ap.add_argument("--scenarios", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--jobs", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    data_dir = out / "data"
    data_dir.mkdir(exist_ok=True)

    print(f"synthesizing {args.span_days} days of data (seed {args.seed}) ...")
    t0 = time.perf_counter()
    dataset = synthesize_dataset(SynthConfig(span_days=args.span_days), seed=args.seed)
    write_forecasts(data_dir / "forecasts.csv", dataset.forecasts)
    write_observations(data_dir / "observations.csv", dataset.observations)
    print(f"  {len(dataset.forecasts)} forecasts in {time.perf_counter() - t0:.1f}s")

    rc = cli_main(
        [
            "evaluate",
            "--forecasts",
            str(data_dir / "forecasts.csv"),
            "--observations",
            str(data_dir / "observations.csv"),
            "--out",
            str(out),
            "--scenarios",
            str(args.scenarios),
            "--seed",
            str(args.seed),
            "--jobs",
            str(args.jobs),
        ]
    )
    if rc == 0:
        print((out / "summary.txt").read_text())
    return rc


if __name__ == "__main__":
    sys.exit(main())
