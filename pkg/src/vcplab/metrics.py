"""Channel and state quality metrics: entangled-state fidelity, coherent
information and the virtual-state infidelity used by the experiment runner.
"""

from __future__ import annotations

import numpy as np

from .config import TOL
from .densesim import (
    DensityOperator,
    KrausChannel,
    choi_state,
    maximally_entangled_ket,
    partial_trace,
    von_neumann_entropy,
)
from .gadgets import EstimatorDegenerateError, VirtualState
from .pauli import PauliChannel

# Separability witnesses for the maximally entangled state: a Choi-state
# fidelity above 1/2^N certifies an entangled (non-entanglement-breaking)
# channel. Only N = 1, 2 appear in the reference experiments.
ENTANGLEMENT_FIDELITY_THRESHOLD = {1: 0.5, 2: 0.25}


def entangled_fidelity(channel: PauliChannel | KrausChannel) -> float:
    """<Phi+| (E (x) Id)(Phi+) |Phi+>; equals the identity weight for Pauli channels."""
    if isinstance(channel, PauliChannel):
        return channel.identity_weight
    choi = choi_state(channel)
    phi = maximally_entangled_ket(channel.num_qubits)
    value = phi.conj() @ choi.matrix @ phi
    return float(value.real)


def coherent_information(channel: PauliChannel | KrausChannel) -> float:
    """I_C = S(output marginal) - S(joint Choi state) for the maximally
    entangled input; a lower bound witness for the quantum capacity."""
    joint = choi_state(channel)
    n = joint.num_qubits // 2
    marginal = partial_trace(joint, tuple(range(n)))  # drop the reference half
    return von_neumann_entropy(marginal) - von_neumann_entropy(joint)


def virtual_infidelity(state: VirtualState, ideal) -> float:
    """1 - <psi| numerator |psi> / denominator against a pure reference.

    The value is returned unclamped: pathological virtual states can push it
    outside [0, 1], and callers are expected to flag such rows rather than
    hide them.
    """
    if abs(state.denominator) < TOL.denominator_underflow:
        raise EstimatorDegenerateError("virtual denominator underflowed")
    if isinstance(ideal, DensityOperator):
        overlap = float(np.trace(ideal.matrix @ state.numerator.matrix).real)
    else:
        psi = np.asarray(ideal, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        overlap = float((psi.conj() @ state.numerator.matrix @ psi).real)
    return 1.0 - overlap / state.denominator
