"""Neighbor-count kinetic inequality on plane-wave Slater determinants.

For each (N, R, mode) prints the exact kinetic energy, the sampled
right-hand side, the ratio with its batch-means error, the 3-sigma margin,
the conservative ratio lhs / (rhs + 3 sigma_rhs) and how many sampled
configurations had any neighbor at all.

    python scripts/lt_study.py --samples 10000 --seed 0
"""

import argparse

import numpy as np

from qedbounds.harness import row_seed
from qedbounds.lt import lt_ratio, neighbor_counts, orbital_set, sample_slater


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, nargs="+", default=[2, 4, 6])
    ap.add_argument("--samples", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--unpolarized", action="store_true")
    args = ap.parse_args()

    for i, N in enumerate(args.N):
        orb = orbital_set(N, 1.0, q=2, polarized=not args.unpolarized)
        stats = sample_slater(orb, args.samples, 500, row_seed(args.seed, 11, i))
        print(f"N={N} acceptance={stats.acceptance_rate:.3f} step={stats.step_width:.3f}")
        for frac in (0.125, 0.25):
            events = int(np.sum([neighbor_counts(x, frac, 1.0).any() for x in stats.samples]))
            for mode in ("nonrel", "rel"):
                r = lt_ratio(orb, frac, 2, mode, samples=stats)
                print(f"  R=L*{frac:<6g} {mode:<6s} lhs={r.lhs:.5g} rhs={r.rhs:.4g} ratio={r.ratio:.4g} "
                      f"+- {r.stderr:.3g} margin={r.margin:.4g} conservative={r.conservative_ratio:.4g} "
                      f"configs-with-neighbors={events}")


if __name__ == "__main__":
    main()
