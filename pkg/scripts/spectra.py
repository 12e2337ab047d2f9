"""Two-color spectra of the released photon and frequency sidebands from homogeneous modulation."""
import argparse

import numpy as np

from darklattice.greens import coupling_matrix, dispersion
from darklattice.lattice import CIRCULAR, build_square_lattice
from darklattice.protocols.spectra import sideband_experiment, spectrum_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=21)
    ap.add_argument("--spacings", type=float, nargs="+", default=[0.2, 0.3])
    ap.add_argument("--Deltas", type=float, nargs="+", default=[2.0, 5.0])
    ap.add_argument("--ratios", type=float, nargs="+", default=[0.5, 1.5], help="delta / Omega for sidebands")
    ap.add_argument("--Omega", type=float, default=2 * np.pi)
    args = ap.parse_args()

    for d in args.spacings:
        lat = build_square_lattice(args.n, args.n, d)
        coupling = coupling_matrix(lat)
        M = dispersion((np.pi / d, np.pi / d), d, CIRCULAR)
        G = dispersion((0.0, 0.0), d, CIRCULAR)
        for Delta in args.Deltas:
            run = spectrum_experiment(lat, Delta, 6 * d, M.J, G.J, G.Gamma, coupling=coupling)
            sep = run.poles[0].real - run.poles[1].real
            print(f"d={d} Delta={Delta}: poles {np.round(run.poles, 4)}, separation {sep:.4f} "
                  f"(analytic {run.analytic.separation:.4f}), predominant side {run.side:+d}")
    d = 0.3
    lat = build_square_lattice(args.n, args.n, d)
    coupling = coupling_matrix(lat)
    grid = np.arange(-30, 30, 0.01)
    for ratio in args.ratios:
        run = sideband_experiment(lat, 0.75, 6 * d, ratio * args.Omega, args.Omega, grid, coupling=coupling)
        print(f"delta/Omega={ratio}:")
        for n, r, e in zip(run.orders, run.ratios(), run.expected**2 / run.expected[run.orders == 0][0] ** 2):
            print(f"  n={n:+d}  weight/weight_0 {r:.4f}  J_n^2/J_0^2 {e:.4f}")


if __name__ == "__main__":
    main()
