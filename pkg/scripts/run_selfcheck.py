#!/usr/bin/env python3
"""Run the invariant suite and print one line per check."""

import sys

from sphaerica.selfcheck import run_all


def main() -> int:
    failures = 0
    for name, ok, metric in run_all():
        print(f"{'PASS' if ok else 'FAIL'}  {name:32s} {metric:.3e}")
        failures += 0 if ok else 1
    return 0 if failures == 0 else 3


if __name__ == "__main__":
    sys.exit(main())
