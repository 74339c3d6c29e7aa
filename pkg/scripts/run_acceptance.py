"""Run the acceptance criteria and print one line per criterion.

    python3 scripts/run_acceptance.py            # all twelve
    python3 scripts/run_acceptance.py 2 11 -v    # selected, with full reports
"""

from __future__ import annotations

import argparse
import sys

from kamstab import acceptance


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("numbers", nargs="*", type=int, help="criteria to run (default: all)")
    parser.add_argument("-v", "--verbose", action="store_true", help="print every check")
    args = parser.parse_args()
    results = acceptance.run(args.numbers or None)
    for r in results:
        print(r.report() if args.verbose else r.summary())
    n_ok = sum(r.passed for r in results)
    print(f"{n_ok}/{len(results)} criteria passed")
    return 0 if n_ok == len(results) else 1


if __name__ == "__main__":
    sys.exit(main())
