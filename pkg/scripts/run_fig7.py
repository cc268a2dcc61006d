#!/usr/bin/env python3
"""Fidelity and coherent information of the post-selected purified channel
across the depolarizing strength grid, for one- and two-qubit channels."""

import argparse
from pathlib import Path

from vcplab.experiments import ExperimentConfig, run_experiment


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    for num_qubits in (1, 2):
        config = ExperimentConfig.from_dict(
            {"experiment": "fig7", "seed": 1, "num_qubits": num_qubits}
        )
        path = out_dir / f"fig7_n{num_qubits}.csv"
        rows, _ = run_experiment(config, out_path=path)
        print(f"fig7 N={num_qubits}: {len(rows)} rows -> {path}")


if __name__ == "__main__":
    main()
