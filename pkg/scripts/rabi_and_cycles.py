"""X-M Rabi oscillations on a finite lattice, quality factors, and cyclic transfer between dark states."""
import argparse

import numpy as np

from darklattice.greens import coupling_matrix
from darklattice.lattice import build_square_lattice
from darklattice.protocols.rabi import (count_periods, cycle_experiment, dominant_sequence, is_cyclic,
                                        quality_for_waist, rabi_experiment)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=21)
    ap.add_argument("--spacing", type=float, default=0.3)
    ap.add_argument("--Deltas", type=float, nargs="+", default=[0.3, 5.0])
    ap.add_argument("--t-ends", type=float, nargs="+", default=[120.0, 8.0])
    ap.add_argument("--cycles", action="store_true", help="also run the 61x61 cyclic transfers (minutes)")
    args = ap.parse_args()

    d = args.spacing
    for Delta in (1.0, 3.0, 10.0, 30.0):
        print(f"Q(Delta={Delta}) = {quality_for_waist(6 * d, d, Delta):.0f}")
    lat = build_square_lattice(args.n, args.n, d)
    coupling = coupling_matrix(lat)
    for Delta, t_end in zip(args.Deltas, args.t_ends):
        run = rabi_experiment(lat, Delta, 6 * d, t_end, stride=2, coupling=coupling)
        print(f"Delta={Delta}: {count_periods(run.times, run.populations[:, 1])} periods, "
              f"max M population {run.populations[:, 1].max():.3f}, final norm {run.norms[-1]:.3f}")
    if args.cycles:
        for n_states, dc in ((3, 0.4), (4, 0.3)):
            big = build_square_lattice(61, 61, dc)
            for direction in (1, -1):
                run = cycle_experiment(big, n_states, 16 * dc, 3.0, direction=direction)
                seq = dominant_sequence(run)
                print(f"{n_states} states, direction {direction:+d}: sequence {seq}, cyclic {is_cyclic(seq, n_states)}")


if __name__ == "__main__":
    main()
