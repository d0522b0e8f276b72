"""
Harmonic recoil: msd(t) for matched and mismatched initial widths.

The matched width alpha^2 = 2D/gamma does not spread; other widths breathe
around it. The Smoluchowski (Ornstein-Uhlenbeck) process with the same
potential relaxes to the same stationary density.

    python scripts/non_dispersive.py --gamma 1 --alphas 0.7 1.0 1.4
"""
import argparse

import numpy as np

from brownrecoil import diagnostics
from brownrecoil.evolve import (FokkerPlanckETD, SplitStepSchrodinger, madelung_compose,
                                stationary_density)
from brownrecoil.fields import DiffusionParams, Grid, ScalarField, VectorField1D, gaussian_density, integrate


def main():
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--D", type=float, default=0.5)
    ap.add_argument("--gamma", type=float, default=1.0)
    ap.add_argument("--alphas", type=float, nargs="+", default=[0.7, 1.0, 1.4])
    ap.add_argument("--t-end", type=float, default=10.0)
    ap.add_argument("--dt", type=float, default=0.002)
    args = ap.parse_args()

    params = DiffusionParams(args.D)
    grid = Grid(-12.0, 12.0, 512)
    Om = ScalarField(grid, 0.5 * args.gamma ** 2 * grid.x ** 2 - args.D * args.gamma, "Omega")
    zero = ScalarField(grid, np.zeros(grid.n_points), "S")
    print(f"matched alpha = {np.sqrt(2 * args.D / args.gamma):.4f}")
    steppers = [SplitStepSchrodinger(madelung_compose(gaussian_density(grid, a), zero, params), args.dt, params, Om)
                for a in args.alphas]
    print(f"{'t':>6} " + " ".join(f"alpha={a:<8g}" for a in args.alphas))
    per_row = int(round(args.t_end / 10 / args.dt))
    for row in range(11):
        if row:
            for s in steppers:
                for _ in range(per_row):
                    s.step()
        print(f"{steppers[0].time:6.2f} " + " ".join(
            f"{diagnostics.msd(ScalarField(grid, np.abs(s.psi) ** 2, 'rho')):14.8f}" for s in steppers))

    b = VectorField1D(grid, -args.gamma * grid.x, "b")
    fp = FokkerPlanckETD(gaussian_density(grid, 0.5, center=1.0), b, args.dt / 2, params)
    for _ in range(int(round(40.0 / fp.dt))):
        fp.step()
    ou = stationary_density(b, params)
    print(f"\nL1(OU after t = 40, exp(int b/D)) = {integrate(np.abs(fp.state().values - ou.values), grid):.2e}")


if __name__ == "__main__":
    main()
