"""Command-line entry point.

Subcommands:
  run       execute a configured experiment and write its CSV
  budget    evaluate the closed-form error budget for a parameter file
  validate  run the oracle/invariant self-check suite
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import budget as bd
from . import validate as _validate
from .experiments import ExperimentConfig, run_experiment


def _cmd_run(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if args.seed is not None:
        data["seed"] = args.seed
    config = ExperimentConfig.from_dict(data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / (config.out or f"{config.experiment}.csv")
    rows, _ = run_experiment(config, threads=args.threads, out_path=out_path)
    print(f"{config.experiment}: wrote {len(rows)} rows to {out_path}")
    return 0


def _cmd_budget(args) -> int:
    with open(args.params, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    params = bd.BudgetParams(
        num_qubits=data["num_qubits"],
        depth=data["depth"],
        gate_error=data["gate_error"],
        alpha=data.get("alpha", 5.0),
        order=data.get("order", 2),
        n_channel=data.get("n_channel"),
        n_state=data.get("n_state"),
    )
    rows = bd.budget_table(params)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(list(rows[0].keys()))
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row.values()])
    finally:
        if args.out:
            out.close()
    opt = bd.optimal_layers(params)
    comp = bd.compare_vsp(params)
    dstar = bd.d_star_small_noise(params)
    print(f"# lambda = {params.circuit_fault_rate:.6g}", file=sys.stderr)
    closed = f"{opt.closed_form:.4f}" if opt.closed_form_valid else "invalid"
    print(f"# L* closed-form = {closed}, integer scan = {opt.numeric}", file=sys.stderr)
    print(f"# d* = {dstar.d_star:.4f} (small-noise param {dstar.small_noise_parameter:.3g})", file=sys.stderr)
    ratio = f"{comp.ratio:.4f}" if comp.ratio_defined else "undefined"
    print(f"# VSP ratio R = {ratio}; VSP depth bound = {comp.vsp_depth_bound:.4g} "
          f"(applicable: {comp.vsp_applicable})", file=sys.stderr)
    return 0


def _cmd_validate(args) -> int:
    return 0 if _validate.run_all(verbose=True) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vcplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a configured experiment")
    run_p.add_argument("--config", required=True, help="JSON experiment config file")
    run_p.add_argument("--out", required=True, help="output directory for CSV results")
    run_p.add_argument("--threads", type=int, default=1, help="parallel worker processes")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.set_defaults(func=_cmd_run)

    budget_p = sub.add_parser("budget", help="evaluate the closed-form budget")
    budget_p.add_argument("--params", required=True, help="JSON budget parameter file")
    budget_p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    budget_p.set_defaults(func=_cmd_budget)

    val_p = sub.add_parser("validate", help="run the oracle/invariant suite")
    val_p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
