#!/usr/bin/env python3
"""Precision/recall/F1 from aligned/generated/reference n-gram counts.

Give one or more triples and get the derived ratios, e.g.:

    score_counts.py 19585 49088 164245
    score_counts.py 19585 49088 164245  8825 46505 159605
"""

import argparse

from livetl.eval_align import prf


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "counts", type=int, nargs="+",
        help="aligned gen_total ref_total, repeated per row",
    )
    args = parser.parse_args()
    if len(args.counts) % 3:
        parser.error("counts come in triples: aligned gen_total ref_total")

    print(f"{'aligned':>12}{'generated':>12}{'reference':>12}{'P':>9}{'R':>9}{'F1':>9}")
    for k in range(0, len(args.counts), 3):
        aligned, gen_total, ref_total = args.counts[k : k + 3]
        p, r, f1 = prf(aligned, gen_total, ref_total)
        print(f"{aligned:>12}{gen_total:>12}{ref_total:>12}{p:>9.4f}{r:>9.4f}{f1:>9.4f}")


if __name__ == "__main__":
    main()
