"""The relativistic overlap kernel K_ell and the gap-root lower bound.

Prints K against its single-integral bound, the small-coupling
coefficient, and the alpha exponent of the lower bound for both kernels.

    python scripts/k_ell_study.py
"""

import argparse
import math

import numpy as np

from qedbounds.bounds import (k_ell, k_ell_reference, k_ell_single_bound, k_ell_small_coefficient, rel_lower,
                              rel_upper)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alphas", type=float, nargs="+", default=[1e-4, 1e-3, 1e-2])
    ap.add_argument("--skip-double", action="store_true", help="only the single-integral kernel")
    args = ap.parse_args()

    print("alpha      ell      K            reference    single bound  K - bound")
    for a in (1e-4, 1e-2, 1.0):
        for ell in (0.5, 2.0, 10.0, 50.0, 300.0):
            k = k_ell(a, ell)
            print(f"{a:<9.0e} {ell:<8g} {k.K_value:.10f} {k_ell_reference(a, ell):.10f} "
                  f"{k.K_single_integral_bound:.10f} {k.K_value - k_ell_single_bound(a, ell):+.3e}")

    c = k_ell_small_coefficient()
    print(f"small alpha ell^2 coefficient: fitted {c['fitted']:.7f}, expansion 1/(24 pi^2) = {c['expanded']:.7f}, "
          f"printed 1/(96 pi) = {c['printed']:.7f}")

    kernels = ["single"] + ([] if args.skip_double else ["double"])
    for kern in kernels:
        recs = [rel_lower(a, 1.0, kernel=kern) for a in args.alphas]
        slope = np.polyfit(np.log(args.alphas), np.log([r.value for r in recs]), 1)[0]
        print(f"kernel={kern}: alpha exponent {slope:.4f}")
        for a, r in zip(args.alphas, recs):
            print(f"   alpha={a:g} lower={r.value:.6g} upper={rel_upper(a, 1.0).value:.6g} "
                  f"ell*={r.aux['ell_star']:.4g} ell*sqrt(alpha)={r.aux['ell_star'] * math.sqrt(a):.4g}")


if __name__ == "__main__":
    main()
