#!/usr/bin/env python3
"""Print the margin-decay tables for all probe families.

Each row shows the reduced minimum modulus of the map and of its
square, the image/kernel angle data, and the composition-criterion
margin.  The interesting column is gamma_f2 for the nonclosed-square
family: it decays like 1/n while gamma_f stays flat, which is the
finite shadow of a non-closed squared range.

Usage:
    python3 scripts/decay_tables.py --sizes 4,8,16,32,64
    python3 scripts/decay_tables.py --family nonclosed-square --csv out.csv
"""

import argparse
import csv
import sys

from modop.probes import FAMILY_NAMES, family_table

COLUMNS = ("n", "gamma_f", "gamma_f2", "c0", "delta", "bouldin_margin")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--family", choices=sorted(FAMILY_NAMES), default=None,
                        help="restrict to one family (default: all)")
    parser.add_argument("--sizes", default="4,8,16,32",
                        help="comma-separated sizes (default: 4,8,16,32)")
    parser.add_argument("--csv", default=None, metavar="PATH",
                        help="also write the rows as CSV")
    args = parser.parse_args(argv)

    sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    families = [args.family] if args.family else sorted(FAMILY_NAMES)

    rows = []
    for family in families:
        # the multiplier family is the only one defined at n = 1
        usable = [n for n in sizes if n >= 2 or family == "multiplier"]
        table = family_table(family, usable)
        print(f"\n{family}  (sizes {usable})")
        print("  " + "  ".join(f"{c:>14}" for c in COLUMNS))
        for i in range(len(usable)):
            row = table.row(i)
            print("  " + "  ".join(
                f"{row[c]:>14d}" if c == "n" else f"{row[c]:>14.6e}" for c in COLUMNS
            ))
            rows.append({"family": family, **row})
        for name, ok in sorted(table.monotonicity.items()):
            print(f"    {name}: {ok}")

    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=("family",) + COLUMNS)
            writer.writeheader()
            writer.writerows(rows)
        print(f"\nwrote {len(rows)} rows to {args.csv}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
