"""Tabulate the Adams bump: m(s), H(s), and the X1X1 metric entry at t = H(s)."""

import argparse
import csv
import sys

import numpy as np

from heislorentz.examples import AdamsSpec, adams_path
from heislorentz.geometry import frame_gram
from heislorentz.symplectic import standard_splitting


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--center", type=float, default=1.0)
    ap.add_argument("--width", type=float, default=1.2)
    ap.add_argument("--floor", type=float, default=1.0)
    ap.add_argument("--amplitude", type=float, default=0.6)
    ap.add_argument("--samples", type=int, default=32)
    args = ap.parse_args(argv)
    spec = AdamsSpec(n=1, center=args.center, width=args.width, floor=args.floor, amplitude=args.amplitude)
    bundle = adams_path(spec)
    s = standard_splitting(1)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["s", "m", "t", "g_X1_X1"])
    for x in np.linspace(0, 2 * np.pi, args.samples, endpoint=False):
        t = bundle.model.H(x)
        g = frame_gram(bundle.path, s, t)[2, 2]
        out.writerow([f"{x:.6f}", f"{spec.m(x):.10f}", f"{t:.10f}", f"{g:.10f}"])
    print(f"# alpha = {bundle.alpha:.12f}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
