#!/usr/bin/env python3
"""Scan the closed-form error budget over lambda and emit optimizer summaries."""

import argparse

import numpy as np

from vcplab.budget import BudgetParams, compare_vsp, d_star_small_noise, optimal_layers


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--num-qubits", type=int, default=4)
    parser.add_argument("--depth", type=int, default=240)
    parser.add_argument("--alpha", type=float, default=5.0)
    parser.add_argument("--order", type=int, default=2)
    args = parser.parse_args()

    print("lambda  p         L*_closed  L*_scan  d*       R        VSP_ok")
    for lam in np.linspace(0.5, 5.0, 10):
        p = lam / (args.num_qubits * args.depth)
        params = BudgetParams(args.num_qubits, args.depth, p, args.alpha, args.order)
        opt = optimal_layers(params)
        comp = compare_vsp(params)
        dstar = d_star_small_noise(params)
        closed = f"{opt.closed_form:8.3f}" if opt.closed_form_valid else "  invalid"
        ratio = f"{comp.ratio:7.3f}" if comp.ratio_defined else "   n/a"
        print(
            f"{lam:5.2f}  {p:.6f}  {closed}  {opt.numeric:7d}  {dstar.d_star:7.2f}  {ratio}  {comp.vsp_applicable}"
        )


if __name__ == "__main__":
    main()
