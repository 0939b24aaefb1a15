"""Run the built-in benchmark suite and print a per-row table.

Same computation as `gridstrength validate`, human-oriented output:
one line per checked quantity, deviation against tolerance, and an
overall verdict.  Exit status 0 only if every row passes.
"""

import argparse
import sys
import time

from gridstrength.validate import validate_suite


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--agg", default="mean", choices=("mean", "max", "first"))
    args = ap.parse_args(argv)

    t0 = time.time()
    report = validate_suite(jobs=args.jobs, aggregation=args.agg)
    elapsed = time.time() - t0

    width = max(len(r.quantity) for r in report.rows)
    last = None
    for r in report.rows:
        if r.scenario != last:
            print(f"\n{r.scenario}")
            last = r.scenario
        flag = "pass" if r.passed else "FAIL"
        print(f"  {r.quantity:<{width}}  expected {r.expected:>9.4f}  "
              f"computed {r.computed:>9.4f}  dev {r.deviation:7.4f} "
              f"(tol {r.tolerance:g})  {flag}")
    n_fail = len(report.failed())
    print(f"\noverall: {'pass' if report.overall else f'FAIL ({n_fail} rows)'}"
          f"  [{len(report.rows)} rows, {elapsed:.1f} s]")
    return 0 if report.overall else 1


if __name__ == "__main__":
    sys.exit(main())
