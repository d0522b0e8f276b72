"""
Long-time current velocity: recoil slope v/x against the Brownian 1/(2t).

    python scripts/velocity_ratio.py --times 1 10 100
"""
import argparse

import numpy as np

from brownrecoil import analytic
from brownrecoil.evolve import SplitStepSchrodinger, madelung_compose, madelung_decompose
from brownrecoil.fields import DiffusionParams, Grid, ScalarField, gaussian_density


def fitted_slope(grid, rho, v):
    w = rho * (rho > 1e-10 * rho.max())
    return np.sum(w * grid.x * v) / np.sum(w * grid.x ** 2)


def main():
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--D", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--times", type=float, nargs="+", default=[1.0, 10.0, 100.0])
    ap.add_argument("--dt", type=float, default=0.1)
    args = ap.parse_args()

    params = DiffusionParams(args.D)
    t_max = max(args.times)
    grid = Grid(-8 * t_max - 20, 8 * t_max + 20, 8192)
    sol = analytic.FreeRecoilSolution(args.D, args.alpha)
    psi = SplitStepSchrodinger(madelung_compose(gaussian_density(grid, args.alpha),
                                                ScalarField(grid, np.zeros(grid.n_points), "S"), params),
                               args.dt, params)
    print(f"{'t':>8} {'slope (psi)':>14} {'slope (exact)':>14} {'ratio to 1/2t':>14}")
    for t in sorted(args.times):
        while psi.time < t - 1e-9:
            psi.step()
        mf = madelung_decompose(psi.state(), params)
        slope = fitted_slope(grid, mf.rho.values, mf.v.values)
        exact = analytic.free_recoil_eval(sol, t, grid).v.values[-1] / grid.x[-1]
        print(f"{t:8.2f} {slope:14.6e} {exact:14.6e} {slope * 2 * t:14.6f}")


if __name__ == "__main__":
    main()
