"""Coherent-shift overlap exponent: finite lattice sum against its
infinite-volume integral and against the exponent inside K_ell.

    python scripts/overlap_exponent_study.py --res 10 14
"""

import argparse
import math

from qedbounds.bounds import k_ell_exponent, overlap_exponent_continuum, overlap_exponent_lattice
from qedbounds.lattice import lattice


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--res", type=float, nargs="+", default=[10.0, 14.0])
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--ell", type=float, default=4.0)
    args = ap.parse_args()

    L = 2 * math.pi
    for r in args.res:
        lam = r * 2 * math.pi / L
        lat = lattice(args.alpha, lam, L)
        print(f"Lambda L/2pi = {r:g}, {lat.n_modes} modes")
        for s in (0.05, 0.1, 0.25, 0.5, 1.0):
            d = s * args.ell / lam
            lat_v = overlap_exponent_lattice(args.alpha, args.ell, 0.0, d, lat).value
            cont = overlap_exponent_continuum(args.alpha, lam, d)
            kern = k_ell_exponent(args.alpha, args.ell, s)
            print(f"  s={s:<5g} lattice={lat_v:.6g} continuum={cont:.6g} (ratio {lat_v / cont:.4f})  "
                  f"K_ell exponent={kern:.6g} (continuum/K_ell {cont / kern:.4f})")


if __name__ == "__main__":
    main()
