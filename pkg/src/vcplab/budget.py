"""Closed-form error-budget and sampling-cost analysis.

Implements the layered-purification budget: circuit error after purification
P_c,cir(L), the CSWAP contribution P_c,sw(L), the approximate closed-form
optimum L*, the small-noise optimal depth d*, the comparison ratio R against
state purification, and the ratio-estimator variance / sampling overhead.
The integer scan is the authoritative optimum; the closed form is an
approximation and is flagged invalid outside its domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .densesim import DensityOperator
from .pauli import PauliChannel, apply_pauli_channel_matrix, p_m, purify


@dataclass(frozen=True)
class BudgetParams:
    """Model inputs: N qubits, depth D, gate error p, CSWAP ratio alpha,
    purification order M, and error-component counts for channel and state.

    n_channel/n_state default to the global-depolarizing preset
    (4^N - 1 and 2^N - 1); they are model inputs, not quantities derived
    from a circuit.
    """

    num_qubits: int
    depth: int
    gate_error: float
    alpha: float = 5.0
    order: int = 2
    n_channel: int | None = None
    n_state: int | None = None

    def __post_init__(self):
        if min(self.num_qubits, self.depth) < 1 or self.gate_error < 0 or self.alpha <= 0:
            raise ValueError("budget parameters must be positive")
        if self.order < 2:
            raise ValueError("purification order must be >= 2")
        if self.n_channel is None:
            object.__setattr__(self, "n_channel", 4**self.num_qubits - 1)
        if self.n_state is None:
            object.__setattr__(self, "n_state", 2**self.num_qubits - 1)
        if not self.n_channel >= self.n_state >= 1:
            raise ValueError("need n_channel >= n_state >= 1")

    @property
    def circuit_fault_rate(self) -> float:
        """lambda = N * D * p, the average number of faults per circuit run."""
        return self.num_qubits * self.depth * self.gate_error


@dataclass
class LayerBudget:
    layers: int
    p_cir: float
    p_sw: float
    p_tot: float
    p_tot_no_double_count: float  # diagnostic only; headline total is the sum


def vcp_budget(params: BudgetParams, layers: int) -> LayerBudget:
    """Error budget of layered channel purification at a given layer count."""
    if layers < 1:
        raise ValueError("layer count must be >= 1")
    lam = params.circuit_fault_rate
    m = params.order
    p_cir = 1.0 - (1.0 - params.n_channel ** (1 - m) * (1.0 - math.exp(-lam / layers)) ** m) ** layers
    p_sw = 1.0 - math.exp(-params.alpha * m * layers * lam / params.depth)
    return LayerBudget(layers, p_cir, p_sw, p_cir + p_sw, p_cir + p_sw - p_cir * p_sw)


@dataclass
class OptimalLayers:
    closed_form: float | None
    closed_form_valid: bool
    closed_form_with_boundary: int | None  # analytic candidate vs the d = D boundary
    numeric: int
    p_tot_at_numeric: float
    boundary_preferred: bool  # scan optimum sits at L = 1 (large-depth regime)


def optimal_layers(params: BudgetParams) -> OptimalLayers:
    """Approximate closed-form L* and the authoritative integer argmin.

    The closed form equalizes the two error contributions; it is flagged
    invalid when its logarithm argument leaves (0, 1). Above the per-layer
    fault threshold the purified circuit error stops decreasing with more
    layers, so the analytic recommendation compares the rounded closed form
    against the single-layer boundary; the scan covers every L in [1, D] and
    is authoritative.
    """
    lam = params.circuit_fault_rate
    m = params.order
    closed, valid = None, False
    if lam > 0:
        inner = params.n_channel ** ((m - 1) / m) * (1.0 - math.exp(-params.alpha * m * lam / params.depth)) ** (1 / m)
        if 0.0 < inner < 1.0:
            closed = -lam / math.log(1.0 - inner)
            valid = True
    best_l, best_tot = 1, vcp_budget(params, 1).p_tot
    for layers in range(2, params.depth + 1):
        tot = vcp_budget(params, layers).p_tot
        if tot < best_tot:
            best_l, best_tot = layers, tot
    analytic = None
    if valid:
        candidate = max(1, min(params.depth, round(closed)))
        analytic = min((1, candidate), key=lambda layers: vcp_budget(params, layers).p_tot)
    return OptimalLayers(closed, valid, analytic, best_l, best_tot, best_l == 1)


@dataclass
class OptimalDepth:
    d_star: float
    d_star_derivative_form: float
    small_noise_parameter: float  # n_c^(M-1) * alpha*M*lambda/D, should be << 1
    small_noise_ok: bool


def d_star_small_noise(params: BudgetParams) -> OptimalDepth:
    """Small-noise optimal depth per purification layer.

    The primary form comes from equalizing the error contributions; the
    derivative form carries the extra (M-1)^(-1/M) factor and coincides with
    the primary form at M = 2. Both are independent of the total depth.
    """
    m = params.order
    np_rate = params.num_qubits * params.gate_error
    if np_rate <= 0:
        raise ValueError("optimal depth needs a positive per-layer error rate")
    d_star = (params.alpha * m) ** (1 / m) * (params.n_channel / np_rate) ** ((m - 1) / m)
    deriv = (m - 1) ** (-1 / m) * d_star
    small = params.n_channel ** (m - 1) * params.alpha * m * params.circuit_fault_rate / params.depth
    return OptimalDepth(d_star, deriv, small, small < 0.1)


def cir_threshold_root(order: int = 2) -> float:
    """Root of (1 + M x) e^{-x} = 1: the per-layer depth threshold where the
    purified circuit error per unit depth changes monotonicity."""
    f = lambda x: (1.0 + order * x) * math.exp(-x) - 1.0
    return float(brentq(f, 1e-9, 50.0))


@dataclass
class VspComparison:
    p_s_cir: float
    p_s_sw: float
    p_s_tot: float
    ratio: float
    ratio_defined: bool
    ratio_small_noise: float
    layers_used: int
    vsp_depth_bound: float    # D < ln2 / p, exactly as printed
    vsp_applicable: bool
    vcp_layer_depth_bound: float  # d < 2 ln2 / p for each purification layer
    vcp_layer_applicable: bool


def compare_vsp(params: BudgetParams) -> VspComparison:
    """State-purification budget and the improvement ratio R at optimal layers.

    R = P_s,tot / P_c,tot(L*); the small-noise approximation is
    (1/2) L*^(M-1) (n_c/n_s)^(M-1). At lambda = 0 the ratio is 0/0 and is
    reported as a flagged neutral 1.
    """
    lam = params.circuit_fault_rate
    m = params.order
    p_s_cir = params.n_state ** (1 - m) * (1.0 - math.exp(-lam)) ** m
    p_s_sw = 1.0 - math.exp(-params.alpha * m * lam / params.depth)
    p_s_tot = p_s_cir + p_s_sw
    opt = optimal_layers(params)
    if lam > 0 and opt.p_tot_at_numeric > 0:
        ratio, defined = p_s_tot / opt.p_tot_at_numeric, True
    else:
        ratio, defined = 1.0, False
    small = 0.5 * opt.numeric ** (m - 1) * (params.n_channel / params.n_state) ** (m - 1)
    vsp_bound = math.log(2.0) / params.gate_error if params.gate_error > 0 else math.inf
    vcp_bound = 2.0 * math.log(2.0) / params.gate_error if params.gate_error > 0 else math.inf
    return VspComparison(
        p_s_cir=p_s_cir,
        p_s_sw=p_s_sw,
        p_s_tot=p_s_tot,
        ratio=ratio,
        ratio_defined=defined,
        ratio_small_noise=small,
        layers_used=opt.numeric,
        vsp_depth_bound=vsp_bound,
        vsp_applicable=params.depth < vsp_bound,
        vcp_layer_depth_bound=vcp_bound,
        vcp_layer_applicable=params.depth / max(opt.numeric, 1) < vcp_bound,
    )


@dataclass
class VarianceReport:
    variance: float
    sampling_overhead: float
    p_m: float
    shots: int
    shots_for_target: int | None


def variance_and_cost(
    channel: PauliChannel,
    rho: DensityOperator,
    observable: np.ndarray,
    order: int,
    shots: int,
    epsilon: float | None = None,
) -> VarianceReport:
    """Closed-form ratio-estimator variance and sampling overhead.

    Var(x/y) ≈ (1/(K P_M^2)) { Tr[O^2 E^(M) rho] - 2 Tr[O E^(M) rho] Tr[O E rho]
    + Tr[O E^(M) rho]^2 } and C_em = P_M^(-2). With epsilon given, also
    reports the shot count needed to push the variance to epsilon^2.
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    obs = np.asarray(observable, dtype=complex)
    n = channel.num_qubits
    targets = tuple(range(n))
    pm = p_m(channel, order)
    if pm < 1e-12:
        raise ValueError("P_M underflow: purified normalization vanished")
    rho_m = apply_pauli_channel_matrix(rho.matrix, purify(channel, order), targets, n)
    rho_1 = apply_pauli_channel_matrix(rho.matrix, channel, targets, n)
    t_o2 = float(np.trace(obs @ obs @ rho_m).real)
    t_om = float(np.trace(obs @ rho_m).real)
    t_o1 = float(np.trace(obs @ rho_1).real)
    variance = (t_o2 - 2.0 * t_om * t_o1 + t_om**2) / (shots * pm**2)
    overhead = pm**-2
    shots_for = None
    if epsilon is not None:
        shots_for = math.ceil(max(variance * shots, 0.0) / epsilon**2)
    return VarianceReport(variance, overhead, pm, shots, shots_for)


def sampling_overhead_bound(fault_rate: float, order: int) -> float:
    """Depolarizing-limit lower bound e^{M lambda} / (1 + (e^lambda - 1)^M)."""
    return math.exp(order * fault_rate) / (1.0 + (math.exp(fault_rate) - 1.0) ** order)


def budget_table(params: BudgetParams, layer_values=None) -> list[dict]:
    """One row per (params, L), ready for CSV emission."""
    rows = []
    layer_values = range(1, params.depth + 1) if layer_values is None else layer_values
    for layers in layer_values:
        b = vcp_budget(params, layers)
        rows.append(
            {
                "N": params.num_qubits,
                "D": params.depth,
                "p": params.gate_error,
                "alpha": params.alpha,
                "M": params.order,
                "n_c": params.n_channel,
                "n_s": params.n_state,
                "lambda": params.circuit_fault_rate,
                "L": layers,
                "P_c_cir": b.p_cir,
                "P_c_sw": b.p_sw,
                "P_c_tot": b.p_tot,
                "P_c_tot_no_double_count": b.p_tot_no_double_count,
            }
        )
    return rows
