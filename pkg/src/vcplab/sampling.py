"""Monte-Carlo sampling of the gadget's joint measurement distribution.

Both estimator observables (X on the control, O on the main register)
commute, so every circuit run yields a joint outcome; the ratio estimator is
formed from the two sample means and its spread is assessed by a
nonparametric bootstrap over the outcome counts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .densesim import DensityOperator, _partial_trace_matrix
from .gadgets import GadgetNoise, NoisyLayer, _gadget_final_matrix


@dataclass
class JointDistribution:
    """Outcome table for a simultaneous (X ⊗ O, X ⊗ I) measurement."""

    probs: np.ndarray          # joint outcome probabilities
    x_values: np.ndarray       # X eigenvalue per outcome
    o_values: np.ndarray       # O eigenvalue per outcome

    def exact_numerator(self) -> float:
        return float(np.sum(self.probs * self.x_values * self.o_values))

    def exact_denominator(self) -> float:
        return float(np.sum(self.probs * self.x_values))

    def exact_ratio(self) -> float:
        return self.exact_numerator() / self.exact_denominator()


def gadget_joint_distribution(
    layer: NoisyLayer,
    order: int,
    input_state: DensityOperator,
    observable: np.ndarray,
    gadget_noise: GadgetNoise | None = None,
) -> JointDistribution:
    """Exact joint outcome distribution of one purification block."""
    n = layer.num_qubits
    full, n_total = _gadget_final_matrix(input_state.matrix, n, layer, order, gadget_noise)
    main_base = 1 + (order - 1) * n
    keep = (0,) + tuple(range(main_base, main_base + n))
    reduced = _partial_trace_matrix(full, keep, n_total)

    obs = np.asarray(observable, dtype=complex)
    o_vals, o_vecs = np.linalg.eigh(obs)
    x_vecs = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2.0)
    basis = np.kron(x_vecs, o_vecs)
    probs = np.real(np.einsum("ia,ij,ja->a", basis.conj(), reduced, basis))
    probs = np.clip(probs, 0.0, None)
    probs = probs / probs.sum()
    x_values = np.repeat([1.0, -1.0], len(o_vals))
    o_values = np.tile(o_vals, 2)
    return JointDistribution(probs, x_values, o_values)


@dataclass
class McResult:
    mean: float
    variance: float
    variance_se: float
    shots: int
    bootstrap: int


def mc_sample(
    dist: JointDistribution,
    shots: int,
    seed: int,
    bootstrap: int = 200,
) -> McResult:
    """Ratio-estimator mean and bootstrap variance from `shots` joint samples.

    The variance standard error follows the chi-square spread of a sample
    variance over the bootstrap replicas.
    """
    if shots < 1:
        raise ValueError("need at least one shot")
    rng = np.random.default_rng(seed)
    counts = rng.multinomial(shots, dist.probs)
    num = float(counts @ (dist.x_values * dist.o_values))
    den = float(counts @ dist.x_values)
    if den == 0.0:
        raise ZeroDivisionError("denominator sample mean vanished")
    mean = num / den

    empirical = counts / shots
    ratios = np.empty(bootstrap)
    for b in range(bootstrap):
        c = rng.multinomial(shots, empirical)
        ratios[b] = (c @ (dist.x_values * dist.o_values)) / (c @ dist.x_values)
    variance = float(np.var(ratios, ddof=1))
    variance_se = variance * np.sqrt(2.0 / (bootstrap - 1))
    return McResult(mean, variance, float(variance_se), shots, bootstrap)
