"""Shared random-input generators for the test suite."""

import numpy as np

from vcplab.densesim import DensityOperator
from vcplab.pauli import PauliChannel, all_pauli_strings


def random_density(rng, num_qubits) -> DensityOperator:
    d = 2**num_qubits
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return DensityOperator(m / np.trace(m).real)


def random_unitary(rng, dim) -> np.ndarray:
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_identity_dominant_channel(rng, num_qubits, support=4) -> PauliChannel:
    paulis = list(all_pauli_strings(num_qubits))
    count = min(support, len(paulis) - 1)
    picks = [0] + sorted(int(i) + 1 for i in rng.choice(len(paulis) - 1, size=count, replace=False))
    probs = rng.random(len(picks))
    probs[0] = probs.max() * 1.5
    probs /= probs.sum()
    return PauliChannel(num_qubits, {paulis[i]: float(p) for i, p in zip(picks, probs)})
