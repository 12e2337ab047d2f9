"""Retrieval efficiency with missing atoms: relative drop vs intensity on the holes."""
import argparse

from darklattice.lattice import build_square_lattice
from darklattice.protocols.defects import defect_sweep


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=21)
    ap.add_argument("--spacing", type=float, default=0.3)
    ap.add_argument("--waists", type=float, nargs="+", default=[3, 4, 5, 6, 7], help="units of d")
    args = ap.parse_args()

    base = build_square_lattice(args.n, args.n, args.spacing)
    points, alpha = defect_sweep(base, waists=args.waists)
    print("set      waist  fraction  drop     drop/fraction")
    for p in points:
        print(f"{p.label:<8} {p.waist:5.1f}  {p.fraction:.4f}    {p.drop:.4f}   {p.drop / p.fraction:.3f}")
    print(f"alpha = {alpha:.3f}")
    for label, holes in (("far", [(8, 8)]), ("near", [(2, 0)])):
        (p,), _ = defect_sweep(base, {label: holes}, waists=(4,))
        print(f"{label} defect {holes[0]}: eta_def / eta = {p.eta_def / p.eta:.4f}")


if __name__ == "__main__":
    main()
