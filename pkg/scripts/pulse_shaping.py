"""Design detuning sequences for target photon shapes and check them on a finite lattice."""
import argparse

import numpy as np

from darklattice.greens import coupling_matrix
from darklattice.lattice import build_square_lattice
from darklattice.protocols.shaping import pair_parameters, shaping_experiment, solve_detuning_sequence, window_shape


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--windows", nargs="+", default=["blackman", "tukey", "sine", "triangular"])
    ap.add_argument("--t-end", type=float, default=10.0)
    ap.add_argument("--spacing", type=float, default=0.2)
    ap.add_argument("--n", type=int, default=21, help="atoms per side; 0 skips the lattice check")
    ap.add_argument("--waist", type=float, default=1.2, help="detection waist in lambda0")
    ap.add_argument("--save", default=None, help="npz file for sequences and rates")
    args = ap.parse_args()

    J, G = pair_parameters(args.spacing)
    print(f"J_M - J_Gamma = {J:.4f}, Gamma_Gamma = {G:.4f}")
    lat = build_square_lattice(args.n, args.n, args.spacing) if args.n else None
    coupling = coupling_matrix(lat) if lat is not None else None
    store = {}
    for kind in args.windows:
        target = window_shape(kind, args.t_end)
        seq = solve_detuning_sequence(target, G, J)
        line = f"{kind:>10}: peak |Delta| {seq.peak:6.2f}, plateau from {seq.plateau_start}"
        store[f"{kind}_times"], store[f"{kind}_delta"] = seq.times, seq.values
        if lat is not None:
            run = shaping_experiment(lat, target, args.waist, coupling=coupling)
            line += f", lattice L2 mismatch {100 * run.mismatch():.2f}%, eta {run.eta:.4f}"
            store[f"{kind}_t"], store[f"{kind}_dndt"] = run.times, run.achieved
        print(line)
    if args.save:
        np.savez(args.save, **store)


if __name__ == "__main__":
    main()
