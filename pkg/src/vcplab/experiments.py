"""Config-driven experiment runner.

Each experiment sweeps a grid, averages circuit replicates over explicit
seeds, and emits long-format CSV rows (one row per grid point and metric,
with mean and standard error). Grid points and seeds are independent, so
sweeps parallelize over worker processes with a deterministic merge;
identical config and seed give identical CSV bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from . import budget as bd
from .circuits import build_random_circuit
from .codes import repetition_code
from .densesim import DensityOperator, choi_state
from .gadgets import (
    EstimatorDegenerateError,
    GadgetNoise,
    channel_layer,
    coherent_detector,
    ideal_output_ket,
    incoherent_detector,
    qec_merge_run,
    vcp_layered_run,
    vsp_estimate,
)
from .metrics import coherent_information, entangled_fidelity, virtual_infidelity
from .pauli import (
    PauliChannel,
    PauliString,
    channel_from_labels,
    depolarizing,
    parse_channel,
    post_selected,
    tensor,
    to_kraus,
)
from .sampling import gadget_joint_distribution, mc_sample

EXPERIMENTS = (
    "fig3b",
    "fig3c",
    "fig3d",
    "fig3e",
    "fig3fg",
    "figA6",
    "fig7",
    "budget-table",
    "variance-mc",
    "qec-merge",
    "detectors",
)

CSV_FIELDS = ["experiment", "N", "D", "p", "alpha", "M", "L", "K", "metric", "value", "stderr", "n", "error"]

_DEFAULT_GRIDS = {
    "fig3b": tuple(range(20, 241, 20)),
    "fig3c": (0.002, 0.005, 0.01, 0.02),
    "fig3d": (0.002, 0.005, 0.01, 0.02),
    "fig3e": tuple(range(1, 13)),
    "fig3fg": (0.002, 0.005, 0.01, 0.02),
    "figA6": (0.002, 0.005, 0.01, 0.02),
    "fig7": tuple(round(0.02 * k, 2) for k in range(51)),
}
_DEFAULT_DEPTH_GRIDS = {
    "fig3fg": tuple(range(40, 241, 40)),
    "figA6": tuple(range(40, 241, 40)),
}


@dataclass
class ExperimentConfig:
    """Inputs for one experiment run; seeds are always explicit."""

    experiment: str
    seed: int
    num_qubits: int = 4
    depth: int = 80
    gate_error: float = 0.005
    alpha_ratio: float = 5.0
    order: int = 2
    layer_depth: int = 20
    layer_candidates: tuple[int, ...] = (1, 2, 4, 8, 16)
    replicates: int = 20
    grid: tuple[float, ...] | None = None
    depth_grid: tuple[int, ...] | None = None
    shots: int = 100_000
    bootstrap: int = 200
    noise: dict[str, float] | None = None
    noise_file: str | None = None
    observable: str = "Z"
    out: str | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not isinstance(self.seed, int):
            raise ValueError("seed must be an explicit integer")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.grid is None:
            self.grid = _DEFAULT_GRIDS.get(self.experiment, (0,))
        self.grid = tuple(self.grid)
        if self.depth_grid is None:
            self.depth_grid = _DEFAULT_DEPTH_GRIDS.get(self.experiment, ())
        self.depth_grid = tuple(self.depth_grid)
        self.layer_candidates = tuple(self.layer_candidates)
        if len(self.grid) == 0:
            raise ValueError("sweep grid must be nonempty")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "experiment" not in data or "seed" not in data:
            raise ValueError("config must name an experiment and an explicit seed")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text))

    def seeds(self) -> list[int]:
        return [self.seed + k for k in range(self.replicates)]

    def noise_channel(self, default: dict[str, float]) -> PauliChannel:
        if self.noise_file is not None:
            with open(self.noise_file, "r", encoding="utf-8") as fh:
                return parse_channel(fh.read())
        return channel_from_labels(self.noise if self.noise is not None else default)


# ---------------------------------------------------------------------------
# per-seed simulation workers (top-level for pickling)
# ---------------------------------------------------------------------------

def _circuit_point_worker(task: dict) -> dict:
    """Simulate one (grid point, seed): VSP and/or layered VCP infidelities.

    Returns metric -> float, or metric -> error string for degenerate rows.
    """
    n, depth = task["N"], task["D"]
    circuit = build_random_circuit(n, depth, task["p_gate"], task["seed"])
    ideal = ideal_output_ket(circuit, n)
    noise = None
    if task["p_cswap"] > 0:
        noise = GadgetNoise.depolarizing(task["p_cswap"], task["M"])
    out: dict = {}
    if task.get("vsp"):
        try:
            _, vs = vsp_estimate(circuit, noise)
            out["vsp"] = virtual_infidelity(vs, ideal)
        except EstimatorDegenerateError as exc:
            out["vsp"] = f"degenerate: {exc}"
    for layers in task.get("vcp_layers", ()):
        key = f"vcp_L{layers}"
        try:
            v = vcp_layered_run(circuit, layers, task["M"], noise)
            out[key] = virtual_infidelity(v, ideal)
        except EstimatorDegenerateError as exc:
            out[key] = f"degenerate: {exc}"
    return out


def _run_tasks(tasks: list[dict], threads: int) -> list[dict]:
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_circuit_point_worker, tasks, chunksize=1))
    return [_circuit_point_worker(t) for t in tasks]


def _aggregate(samples: list) -> tuple[float | None, float | None, int, str]:
    values = [s for s in samples if isinstance(s, float)]
    errors = [s for s in samples if not isinstance(s, float)]
    note = f"{len(errors)} of {len(samples)} degenerate" if errors else ""
    if not values:
        return None, None, 0, note or "all replicates degenerate"
    mean = float(np.mean(values))
    stderr = float(np.std(values, ddof=1) / math.sqrt(len(values))) if len(values) > 1 else None
    return mean, stderr, len(values), note


def _row(config, metric, value, stderr=None, n=None, error="", **over):
    base = {
        "experiment": config.experiment,
        "N": config.num_qubits,
        "D": config.depth,
        "p": config.gate_error,
        "alpha": config.alpha_ratio,
        "M": config.order,
        "L": "",
        "K": "",
        "metric": metric,
        "value": value,
        "stderr": stderr,
        "n": n,
        "error": error,
    }
    base.update(over)
    return base


# ---------------------------------------------------------------------------
# experiment implementations
# ---------------------------------------------------------------------------

def _run_fig3b(config: ExperimentConfig, threads: int) -> list[dict]:
    tasks = []
    for depth in config.grid:
        depth = int(depth)
        layers = max(1, depth // config.layer_depth)
        for seed in config.seeds():
            tasks.append(
                {
                    "N": config.num_qubits,
                    "D": depth,
                    "p_gate": config.gate_error,
                    "p_cswap": 0.0,  # panel (b) has no CSWAP noise
                    "M": config.order,
                    "seed": seed,
                    "vsp": True,
                    "vcp_layers": (layers,),
                }
            )
    results = _run_tasks(tasks, threads)
    rows = []
    idx = 0
    for depth in config.grid:
        depth = int(depth)
        layers = max(1, depth // config.layer_depth)
        chunk = results[idx : idx + config.replicates]
        idx += config.replicates
        for metric, key, lcol in (("infid_vsp", "vsp", ""), ("infid_vcp", f"vcp_L{layers}", layers)):
            mean, stderr, n, err = _aggregate([c[key] for c in chunk])
            rows.append(_row(config, metric, mean, stderr, n, err, D=depth, L=lcol))
    return rows


def _run_fig3_psweep(config: ExperimentConfig, threads: int, gate_noise_on: bool) -> list[dict]:
    """fig3c (gate noise on) and fig3d (CSWAP noise only) single-layer sweeps."""
    tasks = []
    for p in config.grid:
        for seed in config.seeds():
            tasks.append(
                {
                    "N": config.num_qubits,
                    "D": config.depth,
                    "p_gate": p if gate_noise_on else 0.0,
                    "p_cswap": config.alpha_ratio * p,
                    "M": config.order,
                    "seed": seed,
                    "vsp": True,
                    "vcp_layers": (1,),
                }
            )
    results = _run_tasks(tasks, threads)
    rows = []
    prefix = "infid" if gate_noise_on else "err_sw"
    idx = 0
    for p in config.grid:
        chunk = results[idx : idx + config.replicates]
        idx += config.replicates
        for metric, key in ((f"{prefix}_vsp", "vsp"), (f"{prefix}_vcp", "vcp_L1")):
            mean, stderr, n, err = _aggregate([c[key] for c in chunk])
            rows.append(_row(config, metric, mean, stderr, n, err, p=p, L=1 if key != "vsp" else ""))
    return rows


def _run_fig3e(config: ExperimentConfig, threads: int) -> list[dict]:
    layer_values = tuple(int(v) for v in config.grid)
    scenarios = (
        ("infid_tot", config.gate_error, config.alpha_ratio * config.gate_error),
        ("infid_cir", config.gate_error, 0.0),
        ("infid_sw", 0.0, config.alpha_ratio * config.gate_error),
    )
    tasks = []
    for _, p_gate, p_cswap in scenarios:
        for seed in config.seeds():
            tasks.append(
                {
                    "N": config.num_qubits,
                    "D": config.depth,
                    "p_gate": p_gate,
                    "p_cswap": p_cswap,
                    "M": config.order,
                    "seed": seed,
                    "vcp_layers": layer_values,
                }
            )
    results = _run_tasks(tasks, threads)
    rows = []
    for s, (metric, _, _) in enumerate(scenarios):
        chunk = results[s * config.replicates : (s + 1) * config.replicates]
        for layers in layer_values:
            mean, stderr, n, err = _aggregate([c[f"vcp_L{layers}"] for c in chunk])
            rows.append(_row(config, metric, mean, stderr, n, err, L=layers))
    return rows


def _sweep_with_optimal(config: ExperimentConfig, threads: int, points: list[tuple[float, int]]) -> list[dict]:
    """Shared core of fig3fg/figA6: VSP vs single and optimal-layer VCP."""
    candidates = tuple(l for l in config.layer_candidates if l <= max(d for _, d in points))
    tasks = []
    for p, depth in points:
        ls = tuple(l for l in candidates if l <= depth) or (1,)
        for seed in config.seeds():
            tasks.append(
                {
                    "N": config.num_qubits,
                    "D": depth,
                    "p_gate": p,
                    "p_cswap": config.alpha_ratio * p,
                    "M": config.order,
                    "seed": seed,
                    "vsp": True,
                    "vcp_layers": ls,
                }
            )
    results = _run_tasks(tasks, threads)
    out = []
    idx = 0
    for p, depth in points:
        ls = tuple(l for l in candidates if l <= depth) or (1,)
        chunk = results[idx : idx + config.replicates]
        idx += config.replicates
        vsp = _aggregate([c["vsp"] for c in chunk])
        per_layer = {l: _aggregate([c[f"vcp_L{l}"] for c in chunk]) for l in ls}
        out.append((p, depth, vsp, per_layer))
    return out


def _rows_fig3fg(config: ExperimentConfig, sweep, sweep_col: str) -> list[dict]:
    rows = []
    for p, depth, vsp, per_layer in sweep:
        over = {"p": p, "D": depth}
        vsp_mean, vsp_se, vsp_n, vsp_err = vsp
        rows.append(_row(config, "infid_vsp", vsp_mean, vsp_se, vsp_n, vsp_err, **over))
        single = per_layer.get(1)
        if single:
            rows.append(_row(config, "infid_vcp_single", single[0], single[1], single[2], single[3], L=1, **over))
        valid = {l: agg for l, agg in per_layer.items() if agg[0] is not None}
        if valid:
            l_opt = min(valid, key=lambda l: valid[l][0])
            opt = valid[l_opt]
            rows.append(_row(config, "infid_vcp_opt", opt[0], opt[1], opt[2], opt[3], L=l_opt, **over))
            rows.append(_row(config, "L_opt", float(l_opt), None, opt[2], "", L=l_opt, **over))
            if vsp_mean is not None and single and single[0] and single[0] > 0:
                rows.append(_row(config, "ratio_single", vsp_mean / single[0], None, None, "", L=1, **over))
            if vsp_mean is not None and opt[0] and opt[0] > 0:
                rows.append(_row(config, "ratio_opt", vsp_mean / opt[0], None, None, "", L=l_opt, **over))
    return rows


def _run_fig3fg(config: ExperimentConfig, threads: int) -> list[dict]:
    points = [(float(p), config.depth) for p in config.grid]
    points += [(config.gate_error, int(d)) for d in config.depth_grid]
    sweep = _sweep_with_optimal(config, threads, points)
    return _rows_fig3fg(config, sweep, "p")


def _run_figA6(config: ExperimentConfig, threads: int) -> list[dict]:
    points = [(float(p), config.depth) for p in config.grid]
    points += [(config.gate_error, int(d)) for d in config.depth_grid]
    sweep = _sweep_with_optimal(config, threads, points)
    rows = []
    for p, depth, _vsp, per_layer in sweep:
        over = {"p": p, "D": depth}
        valid = {l: agg for l, agg in per_layer.items() if agg[0] is not None}
        if valid:
            l_opt = min(valid, key=lambda l: valid[l][0])
            rows.append(_row(config, "L_opt_sim", float(l_opt), None, valid[l_opt][2], "", **over))
        params = bd.BudgetParams(config.num_qubits, depth, p, config.alpha_ratio, config.order)
        opt = bd.optimal_layers(params)
        rows.append(_row(config, "L_star_numeric", float(opt.numeric), None, None, "", **over))
        if opt.closed_form_valid:
            rows.append(_row(config, "L_star_closed", opt.closed_form, None, None, "", **over))
        else:
            rows.append(_row(config, "L_star_closed", None, None, None, "closed form invalid", **over))
    return rows


def _run_fig7(config: ExperimentConfig, threads: int) -> list[dict]:
    rows = []
    for prob in config.grid:
        chan = depolarizing(config.num_qubits, float(prob))
        purified, _ = post_selected(chan, config.order)
        values = {
            "F_direct": entangled_fidelity(chan),
            "F_purified": entangled_fidelity(purified),
            "IC_direct": coherent_information(chan),
            "IC_purified": coherent_information(purified),
        }
        for metric, value in values.items():
            rows.append(_row(config, metric, value, None, 1, "", p=prob))
    return rows


def _run_budget_table(config: ExperimentConfig, threads: int) -> list[dict]:
    params = bd.BudgetParams(
        config.num_qubits, config.depth, config.gate_error, config.alpha_ratio, config.order
    )
    rows = []
    for entry in bd.budget_table(params):
        for metric in ("P_c_cir", "P_c_sw", "P_c_tot", "P_c_tot_no_double_count"):
            rows.append(_row(config, metric, entry[metric], None, None, "", L=entry["L"]))
    opt = bd.optimal_layers(params)
    comparison = bd.compare_vsp(params)
    depth_opt = bd.d_star_small_noise(params)
    summary = {
        "L_star_numeric": float(opt.numeric),
        "L_star_closed": opt.closed_form if opt.closed_form_valid else None,
        "d_star": depth_opt.d_star,
        "P_s_tot": comparison.p_s_tot,
        "R": comparison.ratio if comparison.ratio_defined else None,
    }
    for metric, value in summary.items():
        rows.append(_row(config, metric, value, None, None, "" if value is not None else "undefined"))
    return rows


def _run_variance_mc(config: ExperimentConfig, threads: int) -> list[dict]:
    chan = config.noise_channel({"I": 0.9, "X": 0.1})
    obs = PauliString.from_label(config.observable).matrix()
    rho = DensityOperator.zero_state(chan.num_qubits)
    report = bd.variance_and_cost(chan, rho, obs, config.order, config.shots)
    dist = gadget_joint_distribution(channel_layer(chan), config.order, rho, obs)
    mc = mc_sample(dist, config.shots, config.seed, config.bootstrap)
    values = {
        "var_formula": report.variance,
        "var_empirical": mc.variance,
        "var_boot_se": mc.variance_se,
        "mean_mc": mc.mean,
        "mean_exact": dist.exact_ratio(),
        "c_em": report.sampling_overhead,
    }
    return [_row(config, m, v, None, 1, "", K=config.shots, N=chan.num_qubits) for m, v in values.items()]


def _run_qec_merge(config: ExperimentConfig, threads: int) -> list[dict]:
    chan = config.noise_channel({"III": 0.7, "XII": 0.1, "IXI": 0.1, "IIX": 0.1})
    code = repetition_code(chan.num_qubits)
    rng = np.random.default_rng(config.seed)
    expected_full = sum(p**2 for p in chan.probs.values())
    expected_triv = chan.identity_weight ** 2
    diffs_full, diffs_triv, factors_full, factors_triv = [], [], [], []
    for _ in range(config.replicates):
        d = 2**code.n
        a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        m = a @ a.conj().T
        rho = DensityOperator(m / np.trace(m).real)
        out, factor = qec_merge_run(rho, code, chan)
        diffs_full.append(float(np.max(np.abs(out.matrix - expected_full * rho.matrix))))
        factors_full.append(factor)
        out2, factor2 = qec_merge_run(rho, code, chan, post_select_trivial=True)
        diffs_triv.append(float(np.max(np.abs(out2.matrix - expected_triv * rho.matrix))))
        factors_triv.append(factor2)
    values = {
        "factor_correct": float(np.mean(factors_full)),
        "factor_postselect": float(np.mean(factors_triv)),
        "expected_correct": expected_full**-2,
        "expected_postselect": expected_triv**-2,
        "max_diff_correct": max(diffs_full),
        "max_diff_postselect": max(diffs_triv),
    }
    return [_row(config, m, v, None, config.replicates, "", N=code.n) for m, v in values.items()]


def _run_detectors(config: ExperimentConfig, threads: int) -> list[dict]:
    single = config.noise_channel({"I": 0.9, "X": 0.1})
    pair = tensor(single, single)
    kraus = to_kraus(pair)
    n = pair.num_qubits
    half = n // 2
    swap = np.zeros((2**n, 2**n))
    for a in range(2**half):
        for b in range(2**half):
            swap[(b << half) | a, (a << half) | b] = 1.0
    minus = coherent_detector(kraus, swap, "-")
    plus = coherent_detector(kraus, swap, "+")
    zero = DensityOperator.zero_state(n)
    recompose = np.max(np.abs(plus.choi() + minus.choi() - choi_state(pair).matrix))
    rng = np.random.default_rng(config.seed)
    d = 2**n
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    rho = DensityOperator(m / np.trace(m).real)
    total = sum(
        incoherent_detector(kraus, swap, parity, sign).branch_probability(rho)
        for parity in ("even", "odd")
        for sign in ("+", "-")
    )
    values = {
        "p_minus": minus.branch_probability(zero),
        "coherent_sum_choi_diff": float(recompose),
        "incoherent_trace_sum_dev": abs(total - 1.0),
    }
    return [_row(config, m_, v, None, 1, "", N=n) for m_, v in values.items()]


_RUNNERS = {
    "fig3b": _run_fig3b,
    "fig3c": lambda cfg, th: _run_fig3_psweep(cfg, th, gate_noise_on=True),
    "fig3d": lambda cfg, th: _run_fig3_psweep(cfg, th, gate_noise_on=False),
    "fig3e": _run_fig3e,
    "fig3fg": _run_fig3fg,
    "figA6": _run_figA6,
    "fig7": _run_fig7,
    "budget-table": _run_budget_table,
    "variance-mc": _run_variance_mc,
    "qec-merge": _run_qec_merge,
    "detectors": _run_detectors,
}


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _format_cell(value) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, float):
        return repr(float(value))  # plain float repr even for numpy scalars
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for row in rows:
        writer.writerow([_format_cell(row.get(f)) for f in CSV_FIELDS])
    return buf.getvalue()


def run_experiment(config: ExperimentConfig, threads: int = 1, out_path=None) -> tuple[list[dict], str]:
    """Run the configured experiment; returns (rows, csv text)."""
    rows = _RUNNERS[config.experiment](config, threads)
    text = rows_to_csv(rows)
    if out_path is not None:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return rows, text
