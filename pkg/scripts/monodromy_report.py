"""Print the monodromy example's checks, including the definiteness verdict and its witness."""

import argparse
import sys

import numpy as np

from heislorentz.examples import monodromy_bundle


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=1)
    ap.add_argument("--qmax", type=int, default=5)
    args = ap.parse_args(argv)
    r = monodromy_bundle(args.n, args.qmax).report
    v = r["definiteness"]
    print(f"|e^V - a|            {r['exp_error']:.3e}")
    print(f"det a                {r['det_a']}")
    print(f"b^-1 a b off-diag    {r['conjugate_offdiag']:.3e}")
    print(f"lattice closure      {r['closure']}")
    print(f"{'preserved |q|<=' + str(args.qmax):<21}{all(r['preserved'].values())}")
    print(f"definiteness         {v.verdict} (min eigenvalue {v.min_eigenvalue:.4g})")
    if v.witness is not None:
        print(f"witness              {np.array2string(v.witness, precision=6)}")
    print(f"paper_conflict       {r['paper_conflict']}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
