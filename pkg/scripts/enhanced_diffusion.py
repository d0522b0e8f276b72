"""
Mean squared displacement of a Gaussian with and without recoil.

Prints msd(t) from the closed forms, the split-step and Fokker-Planck
engines, and an Euler-Maruyama ensemble, plus linear/quadratic fits.

    python scripts/enhanced_diffusion.py --t-end 4 --particles 100000
"""
import argparse

import numpy as np

from brownrecoil import analytic, diagnostics, sde
from brownrecoil.evolve import FokkerPlanckETD, SplitStepSchrodinger, madelung_compose
from brownrecoil.fields import DiffusionParams, Grid, ScalarField, VectorField1D, gaussian_density


def main():
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--D", type=float, default=0.5)
    ap.add_argument("--alpha", type=float, default=1.0)
    ap.add_argument("--t-end", type=float, default=4.0)
    ap.add_argument("--dt", type=float, default=0.01)
    ap.add_argument("--particles", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    params = DiffusionParams(args.D)
    width = 8 * np.sqrt(args.alpha ** 2 / 2 + 2 * args.D ** 2 * args.t_end ** 2 / args.alpha ** 2 + 2 * args.D * args.t_end)
    grid = Grid(-width, width, 2048)
    rho0 = gaussian_density(grid, args.alpha)
    n_steps = int(round(args.t_end / args.dt))
    every = max(1, n_steps // 8)

    brown = analytic.FreeBrownianSolution.from_alpha(args.D, args.alpha)
    recoil = analytic.FreeRecoilSolution(args.D, args.alpha)
    fp = FokkerPlanckETD(rho0, VectorField1D(grid, np.zeros(grid.n_points), "b"), args.dt, params)
    psi = SplitStepSchrodinger(madelung_compose(rho0, ScalarField(grid, np.zeros(grid.n_points), "S"), params),
                               args.dt, params)
    ens = sde.gaussian_ensemble(args.particles, args.alpha ** 2 / 2, args.seed)
    mc_b = sde.simulate(ens, sde.SmoluchowskiDrift(lambda x: np.zeros_like(x)), params, args.dt, args.t_end, every)
    mc_r = sde.simulate(ens, sde.AnalyticRecoilDrift(recoil), params, args.dt, args.t_end, every)

    print(f"{'t':>6} | {'brownian':>10} {'fp':>10} {'mc':>10} | {'recoil':>10} {'psi':>10} {'mc':>10}")
    for k, (sb, sr) in enumerate(zip(mc_b, mc_r)):
        t = sb.time
        if k:
            for _ in range(every):
                fp.step()
                psi.step()
        rho_psi = ScalarField(grid, np.abs(psi.psi) ** 2, "rho")
        print(f"{t:6.2f} | {analytic.free_brownian_eval(brown, t, grid).msd:10.5f} "
              f"{diagnostics.msd(fp.state()):10.5f} {np.mean(sb.positions ** 2):10.5f} | "
              f"{analytic.free_recoil_eval(recoil, t, grid).msd:10.5f} {diagnostics.msd(rho_psi):10.5f} "
              f"{np.mean(sr.positions ** 2):10.5f}")

    lin, lin_se = sde.batch_msd_fit(mc_b, 1)
    quad, quad_se = sde.batch_msd_fit(mc_r, 2)
    print(f"\nbrownian slope  {lin[0]:.4f} +- {lin_se[0]:.4f}   (2D = {2 * args.D})")
    print(f"recoil t^2 coef {quad[0]:.4f} +- {quad_se[0]:.4f}   (2D^2/alpha^2 = {2 * args.D ** 2 / args.alpha ** 2})")


if __name__ == "__main__":
    main()
