#!/usr/bin/env python3
"""Sweep geometric target ratios and watch the prefix ladder stabilize.

For each ratio r the targets are d_n = r^(n-1).  The strict tail-domination
condition d_n > sum_{k>n} d_k holds iff r < 1/2, and the pairwise
differences |x_N - x_M| should then shrink geometrically.  r = 1/2 sits
exactly on the boundary (all margins are 0) and r > 1/2 violates it
outright; the ladder is still run so the diagnostic can be inspected.
"""

import argparse

from lethargy import (
    NormSpec,
    TargetSequence,
    check_borodin_condition,
    construct_sequence,
    coordinate_chain,
)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.25, 1 / 3, 0.45, 0.5])
    ap.add_argument("--n-max", type=int, default=6)
    ap.add_argument("--dim", type=int, default=10)
    args = ap.parse_args()

    chain = coordinate_chain(args.dim, args.n_max + 1, NormSpec(2))
    for r in args.ratios:
        d = TargetSequence((1.0,), tail="geometric", ratio=r)
        cond = check_borodin_condition(d)
        factor = cond.tail_margin_factor
        print(f"\nratio {r:.4f}: tail-domination {'holds' if cond.passes else 'FAILS'} "
              f"(margin factor {factor:.4f})")
        traces, table = construct_sequence(chain, d, args.n_max)
        if table.failures:
            for n, msg in table.failures:
                print(f"  prefix {n} failed: {msg}")
        tails = "  ".join(f"{v:.3e}" for v in table.max_tail[:-1])
        print(f"  max_(M>N) |x_N - x_M|: {tails}")
        print(f"  non-increasing: {table.tail_non_increasing}")
        worst = max(t.max_residual for t in traces)
        print(f"  worst residual across prefixes: {worst:.2e}")


if __name__ == "__main__":
    main()
