#!/usr/bin/env python3
"""Fit the wave-transfer lemma constants on the two-band fixture over an eps
ladder and print one verdict line per bound."""

import argparse

import numpy as np

from selfsim.color import ColorProfile
from selfsim.grid import default_grid_size, uniform_grid
from selfsim.measures import build_phi_star, constant_speed_fields, verify_bounds


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--speeds", default="-1.2,0.0",
                    help="band centers; include 0 for a resonant band")
    ap.add_argument("--eps-ladder", default="0.1,0.05,0.025,0.0125")
    ap.add_argument("--M", type=float, default=2.0)
    args = ap.parse_args()

    lams = [float(x) for x in args.speeds.split(",")]
    ladder = [float(x) for x in args.eps_ladder.split(",")]
    M = args.M

    def measure_factory(eps):
        xi = uniform_grid(M, default_grid_size(M, eps))
        mu, lo, hi = constant_speed_fields(xi, lams)
        return build_phi_star(xi, mu, eps, lo, hi)

    def psi_factory(eps):
        xi = uniform_grid(M, default_grid_size(M, eps))
        return ColorProfile(eps, 1.0, M).evaluate_psi(xi)

    report = verify_bounds(measure_factory, ladder, psi_factory)
    for check in report["checks"]:
        verdict = "ok " if check["passed"] else "FAIL"
        vals = "  ".join(f"{v:.3g}" for v in check["per_eps"].values())
        extra = "  ".join(f"{k}={v:.3g}" for k, v in check.items()
                          if k.startswith("fitted") or k == "relative_spread")
        print(f"[{verdict}] {check['name']:<50} {vals}  {extra}")
    print("all bounds verified" if report["passed"] else "SOME BOUNDS FAILED")


if __name__ == "__main__":
    main()
