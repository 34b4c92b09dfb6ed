#!/usr/bin/env python3
"""Solve the coupled p-system Riemann problem along an eps ladder and print
the uniform-estimate table (boundary residual, TV/jump, sup eps|u_xi|,
worst contraction factor)."""

import argparse

import numpy as np

from selfsim.models import preset_model
from selfsim.system import SystemSolveConfig, solve_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--jump-fraction", type=float, default=0.01,
                    help="|uR - uL| as a fraction of the state-ball radius")
    ap.add_argument("--eps-ladder", default="0.1,0.05,0.025")
    args = ap.parse_args()

    model = preset_model("p-system")
    jump = args.jump_fraction * model.delta0
    uL = model.u_ref - np.array([jump / 2.0, 0.0])
    uR = model.u_ref + np.array([jump / 2.0, 0.0])

    print(f"state ball radius delta0 = {model.delta0:.4f}, jump = {jump:.3e}")
    print(f"{'eps':>8} {'boundary':>10} {'TV/jump':>9} {'eps|du|':>10} {'alpha':>8}")
    for eps in (float(x) for x in args.eps_ladder.split(",")):
        st = solve_system(model, SystemSolveConfig(eps=eps), uL, uR)
        print(f"{eps:8.4f} {st.boundary_residual:10.2e} {st.tv_u / jump:9.4f} "
              f"{st.sup_eps_du:10.2e} {max(st.contraction_estimates):8.4f}")


if __name__ == "__main__":
    main()
