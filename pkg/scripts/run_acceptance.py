"""Print one PASS/FAIL line per acceptance criterion (all ten by default).

    python scripts/run_acceptance.py            # all criteria
    python scripts/run_acceptance.py 2 8 -v     # selected criteria with every sub-check
"""
from __future__ import annotations

import argparse

from qtraj.acceptance import CRITERIA, run_all


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("numbers", nargs="*", type=int, choices=sorted(CRITERIA))
    ap.add_argument("-v", "--verbose", action="store_true", help="print every sub-check")
    a = ap.parse_args()
    results = run_all(a.numbers or None, verbose=a.verbose)
    print(f"{sum(r.passed for r in results)}/{len(results)} criteria pass as stated")


if __name__ == "__main__":
    main()
