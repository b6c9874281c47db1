"""Run the acceptance suite and write the JSON report.

    python scripts/run_acceptance.py --out acceptance_report.json [--criteria 1 2 3]
"""

import argparse
import sys

from qedbounds.acceptance import AcceptanceContext, report_json, run_suite
from qedbounds.records import ConstantsSet


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="acceptance_report.json")
    ap.add_argument("--criteria", type=int, nargs="*")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    res = run_suite(AcceptanceContext(ConstantsSet.defaults(), args.seed), args.criteria, echo=print)
    with open(args.out, "w") as fh:
        fh.write(report_json(res) + "\n")
    return 0 if all(r.passed for r in res) else 1


if __name__ == "__main__":
    sys.exit(main())
