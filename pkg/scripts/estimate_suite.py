"""Randomized estimate suite with a per-check failure summary."""
from __future__ import annotations

import argparse
import collections
import time

from bgkmix.estimates import SuiteConfig, run_suite


def _check(name: str) -> str:
    # rows are named "s<i>:d<d>:<check>[<target>]"
    return name.split(":")[-1].split("[")[0]


if __name__ == "__main__":
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=SuiteConfig.master_seed)
    args = ap.parse_args()
    t0 = time.perf_counter()
    res = run_suite(SuiteConfig(master_seed=args.seed, samples=args.samples))
    secs = time.perf_counter() - t0
    by_name = collections.Counter(_check(r.name) for r in res.report.rows)
    bad = collections.Counter(_check(r.name) for r in res.report.failures)
    for name in sorted(by_name):
        print(f"{name:<32} {by_name[name]:>6} rows  {bad[name]:>4} failures")
    print(f"{res.samples} samples in {secs:.1f}s, {len(res.report.failures)} failures")
