#!/usr/bin/env python3
"""Run every verification suite and summarize pass/fail counts.

Equivalent to looping `modop verify <suite>` over all suites with a
shared seed; exits nonzero if any suite reports a failure, so it can
gate a CI job.

Usage:
    python3 scripts/verify_all.py --n 20 --seed 0
    python3 scripts/verify_all.py --shape 2,3 --n 50
"""

import argparse
import sys
import time

from modop.cli import RunConfig, SUITE_NAMES, run_suite


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=20, help="instances per suite")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--shape", default="2,3", help="block sizes, e.g. 2,3")
    args = parser.parse_args(argv)

    cfg = RunConfig(seed=args.seed, n=args.n, shape=args.shape)
    bad = 0
    for suite in SUITE_NAMES:
        start = time.perf_counter()
        payload = run_suite(suite, cfg)
        elapsed = time.perf_counter() - start
        failures = payload["failures"]
        worst = max(map(abs, payload["worst"].values()), default=0.0)
        status = "ok" if not failures else f"FAIL {failures}"
        print(f"{suite:<22} {payload['passes']:>4}/{args.n:<4} "
              f"max metric {worst:.3e}  {elapsed:6.2f}s  {status}")
        bad += len(failures)
    if bad:
        print(f"\n{bad} failing instance(s)")
        return 1
    print("\nall suites clean")
    return 0


if __name__ == "__main__":
    sys.exit(main())
