"""Random benchmark circuits.

One depth unit is a layer of Haar-random single-qubit gates followed by a
brickwork CNOT layer with periodic pairing, alternating (0,1),(2,3),... and
(1,2),(3,0),... Every CNOT carries two single-qubit depolarizing channels of
rate p, so for even qubit counts each unit holds exactly N noise sites and
the circuit fault rate is lambda = N * D * p.
"""

from __future__ import annotations

import numpy as np

from .densesim import GateOp
from .gadgets import NoisyLayer
from .pauli import PauliChannel, depolarizing, tensor


def haar_single_qubit(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed U(2) via QR of a complex Ginibre matrix."""
    z = (rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))) / np.sqrt(2.0)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def cnot_pairs(num_qubits: int, odd: bool) -> list[tuple[int, int]]:
    """Brickwork pattern alternating (0,1),(2,3),... and (1,2),(3,0),..."""
    start = 1 if odd else 0
    return [(a, (a + 1) % num_qubits) for a in range(start, num_qubits - 1 + start, 2)]


def build_random_circuit(
    num_qubits: int,
    depth: int,
    gate_error: float,
    seed: int,
) -> list[NoisyLayer]:
    """Deterministic-in-seed random circuit of `depth` units.

    Each returned layer is one unit (gate layer plus noisy CNOT layer), which
    is also the granularity at which purification layering partitions the
    circuit.
    """
    if depth < 2 or depth % 2 != 0:
        raise ValueError("depth must be even (gate/CNOT layer alternation)")
    rng = np.random.default_rng(seed)
    single = depolarizing(1, gate_error)
    cnot_noise: PauliChannel | None = tensor(single, single) if gate_error > 0 else None
    units: list[NoisyLayer] = []
    for unit in range(depth):
        gates = [GateOp.single(q, haar_single_qubit(rng)) for q in range(num_qubits)]
        noise: list[PauliChannel | None] = [None] * num_qubits
        for a, b in cnot_pairs(num_qubits, unit % 2 == 1):
            gates.append(GateOp.cnot(a, b))
            noise.append(cnot_noise)
        units.append(NoisyLayer(num_qubits, gates, noise))
    return units
