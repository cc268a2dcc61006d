"""Render one figure panel from a long-format results CSV.

The CSV contract is the one emitted by the simulation CLI: columns
experiment, N, D, p, alpha, M, L, K, metric, value, stderr, n, error with one
row per (grid point, metric). Rendering is deterministic: fixed style, no
timestamps, so identical CSV input yields identical image bytes.
"""

from __future__ import annotations

import csv

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

REQUIRED_FIELDS = ["experiment", "N", "D", "p", "alpha", "M", "L", "K", "metric", "value", "stderr", "n", "error"]

PANEL_METRICS = {
    "fig3b": ("infid_vsp", "infid_vcp"),
    "fig3c": ("err_vsp", "err_vcp", "infid_vsp", "infid_vcp"),
    "fig3d": ("err_sw_vsp", "err_sw_vcp"),
    "fig3e": ("infid_tot", "infid_cir", "infid_sw"),
    "fig3fg": ("ratio_single", "ratio_opt"),
    "figA6": ("L_opt_sim", "L_star_closed", "L_star_numeric"),
    "fig7": ("F_direct", "F_purified", "IC_direct", "IC_purified"),
    "budget-table": ("P_c_cir", "P_c_sw", "P_c_tot"),
    "variance-mc": ("var_formula", "var_empirical", "mean_mc", "mean_exact", "c_em"),
    "qec-merge": ("factor_correct", "factor_postselect", "expected_correct", "expected_postselect"),
    "detectors": ("p_minus", "coherent_sum_choi_diff", "incoherent_trace_sum_dev"),
}


class PanelError(ValueError):
    """CSV does not provide what the requested panel needs."""


def load_rows(csv_path: str) -> list[dict]:
    with open(csv_path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_FIELDS if c not in header]
        if missing:
            raise PanelError(f"CSV is missing required columns: {missing}")
        rows = [r for r in reader]
    if not rows:
        raise PanelError("CSV contains no data rows")
    return rows


def _series(rows, metric, x_column):
    points = []
    for row in rows:
        if row["metric"] != metric or row["value"] == "":
            continue
        points.append((float(row[x_column]), float(row["value"]),
                       float(row["stderr"]) if row["stderr"] else 0.0))
    points.sort()
    return points


def _plot_series(ax, rows, metrics, x_column, x_label, y_label, log_y=False, log_x=False, styles=None):
    drew = False
    for i, metric in enumerate(metrics):
        points = _series(rows, metric, x_column)
        if not points:
            continue
        xs, ys, errs = zip(*points)
        style = (styles or {}).get(metric, {})
        if any(errs):
            ax.errorbar(xs, ys, yerr=errs, marker="o", capsize=2, label=metric, **style)
        else:
            ax.plot(xs, ys, marker="o", label=metric, **style)
        drew = True
    if not drew:
        raise PanelError(f"CSV has none of the series {metrics}")
    if log_y:
        ax.set_yscale("log")
    if log_x:
        ax.set_xscale("log")
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.legend()
    ax.grid(True, alpha=0.3)


def _render_fig3b(rows, fig):
    ax = fig.subplots()
    _plot_series(ax, rows, ("infid_vsp", "infid_vcp"), "D", "circuit depth D", "infidelity", log_y=True)
    ax.set_title("state vs layered channel purification")


def _render_psweep(rows, fig, metrics, title):
    ax = fig.subplots()
    _plot_series(ax, rows, metrics, "p", "gate error rate p", "infidelity", log_y=True, log_x=True)
    ax.set_title(title)


def _render_fig3e(rows, fig):
    ax = fig.subplots()
    _plot_series(ax, rows, ("infid_tot", "infid_cir", "infid_sw"), "L", "purification layers L", "infidelity", log_y=True)
    ax.set_title("error budget vs layer count")


def _render_fig3fg(rows, fig):
    p_values = {r["p"] for r in rows if r["metric"] == "ratio_opt"}
    d_values = {r["D"] for r in rows if r["metric"] == "ratio_opt"}
    panels = []
    if len(p_values) > 1 or len(d_values) <= 1:
        panels.append(("p", "gate error rate p", True))
    if len(d_values) > 1:
        panels.append(("D", "circuit depth D", False))
    axes = fig.subplots(1, len(panels))
    if len(panels) == 1:
        axes = [axes]
    for ax, (x_col, x_label, log_x) in zip(axes, panels):
        sub = [r for r in rows if _is_primary_sweep(r, x_col, p_values, d_values)]
        _plot_series(ax, sub, ("ratio_single", "ratio_opt"), x_col, x_label, "VSP / VCP infidelity ratio", log_x=log_x)
        ax.axhline(1.0, color="gray", linewidth=0.8)


def _is_primary_sweep(row, x_col, p_values, d_values):
    # keep rows whose complementary coordinate stays at its modal value
    if x_col == "p":
        return True if len(d_values) <= 1 else row["D"] == _modal(d_values)
    return True if len(p_values) <= 1 else row["p"] == _modal(p_values)


def _modal(values):
    return sorted(values)[0]


def _render_figA6(rows, fig):
    d_values = {r["D"] for r in rows if r["metric"] == "L_opt_sim"}
    x_col, x_label = ("D", "circuit depth D") if len(d_values) > 1 else ("p", "gate error rate p")
    ax = fig.subplots()
    _plot_series(ax, rows, ("L_opt_sim", "L_star_numeric", "L_star_closed"), x_col, x_label, "optimal layers")
    ax.set_title("optimal layer scaling")


def _render_fig7(rows, fig):
    ax_f, ax_ic = fig.subplots(1, 2)
    styles = {
        "F_direct": {"linestyle": "--"},
        "F_purified": {"linestyle": "-"},
        "IC_direct": {"linestyle": "--"},
        "IC_purified": {"linestyle": "-"},
    }
    _plot_series(ax_f, rows, ("F_direct", "F_purified"), "p", "depolarizing strength P", "entangled-state fidelity", styles=styles)
    n_values = {int(r["N"]) for r in rows if r["N"]}
    witness = {1: 0.5, 2: 0.25}
    for n in sorted(n_values):
        if n in witness:
            ax_f.axhline(witness[n], color="gray", linewidth=0.8, linestyle=":")
    _plot_series(ax_ic, rows, ("IC_direct", "IC_purified"), "p", "depolarizing strength P", "coherent information", styles=styles)


def _render_budget_table(rows, fig):
    ax = fig.subplots()
    _plot_series(ax, rows, ("P_c_cir", "P_c_sw", "P_c_tot"), "L", "purification layers L", "error probability", log_y=True)
    ax.set_title("closed-form budget")


def _render_bars(rows, fig, metrics, title):
    ax = fig.subplots()
    values = {}
    for row in rows:
        if row["metric"] in metrics and row["value"] != "":
            values[row["metric"]] = float(row["value"])
    if not values:
        raise PanelError(f"CSV has none of the series {metrics}")
    names = sorted(values)
    ax.barh(range(len(names)), [values[n] for n in names])
    ax.set_yticks(range(len(names)), names)
    ax.set_title(title)
    ax.grid(True, axis="x", alpha=0.3)


RENDERERS = {
    "fig3b": _render_fig3b,
    "fig3c": lambda rows, fig: _render_psweep(rows, fig, ("infid_vsp", "infid_vcp"), "single-layer purification vs p"),
    "fig3d": lambda rows, fig: _render_psweep(rows, fig, ("err_sw_vsp", "err_sw_vcp"), "CSWAP-only error rates"),
    "fig3e": _render_fig3e,
    "fig3fg": _render_fig3fg,
    "figA6": _render_figA6,
    "fig7": _render_fig7,
    "budget-table": _render_budget_table,
    "variance-mc": lambda rows, fig: _render_bars(rows, fig, PANEL_METRICS["variance-mc"], "variance validation"),
    "qec-merge": lambda rows, fig: _render_bars(rows, fig, PANEL_METRICS["qec-merge"], "merged-gadget sampling factors"),
    "detectors": lambda rows, fig: _render_bars(rows, fig, PANEL_METRICS["detectors"], "detector identities"),
}


def plot(csv_path: str, panel_id: str, out_image: str) -> str:
    """Render the named panel from the CSV into out_image (PNG)."""
    if panel_id not in RENDERERS:
        raise PanelError(f"unknown panel {panel_id!r}; choose one of {sorted(RENDERERS)}")
    rows = load_rows(csv_path)
    width = 10.0 if panel_id in ("fig7", "fig3fg") else 6.0
    fig = plt.figure(figsize=(width, 4.0), dpi=150)
    try:
        RENDERERS[panel_id](rows, fig)
        fig.tight_layout()
        fig.savefig(out_image, format="png", metadata={"Software": None})
    finally:
        plt.close(fig)
    return out_image
