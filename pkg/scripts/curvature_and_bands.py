"""Band structure along M'-G-X'-M' and the curvature of the dark band at M vs lattice spacing."""
import argparse
import csv
import sys

import numpy as np

from darklattice.bands import BandPath, band_path_bravais, band_path_checkerboard, band_rows, curvature_at_M
from darklattice.lattice import CIRCULAR


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--spacing", type=float, default=0.2)
    ap.add_argument("--Delta", type=float, default=0.0, help="checkerboard strength (0: Bravais bands)")
    ap.add_argument("--samples", type=int, default=60)
    ap.add_argument("--curvature-spacings", type=float, nargs="+", default=[0.1, 0.15, 0.2, 0.25, 0.3, 0.35])
    ap.add_argument("--out", default=None, help="band CSV path (default: stdout)")
    args = ap.parse_args()

    path = BandPath.from_labels("M',G,X',M'", args.spacing, args.samples)
    if args.Delta:
        points = band_path_checkerboard(path, args.spacing, args.Delta, CIRCULAR)
    else:
        points = band_path_bravais(path, args.spacing, CIRCULAR)
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["k_path_fraction", "kx", "ky", "branch_index", "shift", "decay"])
    w.writerows([v + 0.0 if isinstance(v, float) else v for v in row] for row in band_rows(points))

    print("# d  curvature_MG  curvature_MX  (gamma0 lambda0^2)", file=sys.stderr)
    for d in args.curvature_spacings:
        print(f"# {d:.3f}  {curvature_at_M(d, 'MG'):+.4f}  {curvature_at_M(d, 'MX'):+.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
