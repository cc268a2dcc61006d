"""Non-degenerate stabilizer codes used as ancilla states in the merged gadget.

Syndrome measurement is modeled by exact projector branching over all
2^(#generators) outcomes; circuit-level measurement noise is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .config import TOL
from .densesim import DensityOperator
from .pauli import PauliString


@dataclass
class SyndromeBranch:
    syndrome: tuple[int, ...]
    probability: float
    state: DensityOperator
    correction: PauliString | None


@dataclass
class StabilizerCode:
    """A stabilizer code with a lookup-table decoder over a fixed error set."""

    n: int
    generators: list[PauliString]
    code_projector: np.ndarray
    syndrome_table: dict[tuple[int, ...], PauliString]

    @classmethod
    def build(cls, generators: list[PauliString], correctable: list[PauliString]) -> "StabilizerCode":
        if not generators:
            raise ValueError("need at least one stabilizer generator")
        n = generators[0].num_qubits
        for g in generators:
            if g.num_qubits != n:
                raise ValueError("generators must act on the same register")
        for a in generators:
            for b in generators:
                if not a.commutes_with(b):
                    raise ValueError(f"generators {a.label} and {b.label} anticommute")
        d = 2**n
        proj = np.eye(d, dtype=complex)
        for g in generators:
            proj = proj @ (np.eye(d) + g.matrix()) / 2.0
        if np.max(np.abs(proj @ proj - proj)) > TOL.projector:
            raise ValueError("code projector is not idempotent")
        table: dict[tuple[int, ...], PauliString] = {}
        for err in correctable:
            syn = syndrome_of(err, generators)
            if syn in table:
                raise ValueError(
                    f"errors {table[syn].label} and {err.label} share syndrome {syn}; code is degenerate for this set"
                )
            table[syn] = err
        return cls(n, list(generators), proj, table)

    def projector_rank(self) -> int:
        return int(round(np.trace(self.code_projector).real))

    def syndrome_projector(self, syndrome: tuple[int, ...]) -> np.ndarray:
        d = 2**self.n
        proj = np.eye(d, dtype=complex)
        for bit, g in zip(syndrome, self.generators):
            proj = proj @ (np.eye(d) + (-1) ** bit * g.matrix()) / 2.0
        return proj


def syndrome_of(error: PauliString, generators: list[PauliString]) -> tuple[int, ...]:
    return tuple(0 if error.commutes_with(g) else 1 for g in generators)


def repetition_code(n: int) -> StabilizerCode:
    """Bit-flip repetition code: stabilizers Z_i Z_{i+1}, corrects weight-1 X."""
    if n % 2 == 0 or n < 3:
        raise ValueError("repetition code needs odd n >= 3")
    generators = []
    for i in range(n - 1):
        label = ["I"] * n
        label[i] = label[i + 1] = "Z"
        generators.append(PauliString.from_label("".join(label)))
    correctable = [PauliString.identity(n)]
    for i in range(n):
        label = ["I"] * n
        label[i] = "X"
        correctable.append(PauliString.from_label("".join(label)))
    return StabilizerCode.build(generators, correctable)


def kl_check(code: StabilizerCode, kraus_set) -> tuple[bool, np.ndarray]:
    """Knill-Laflamme test: Pi_C E_j† E_i Pi_C = delta_ij Pi_C for all pairs.

    Accepts Pauli strings or explicit matrices; returns the pass flag and the
    matrix of per-pair residuals.
    """
    ops = [e.matrix() if isinstance(e, PauliString) else np.asarray(e, dtype=complex) for e in kraus_set]
    m = len(ops)
    proj = code.code_projector
    residuals = np.zeros((m, m))
    for i in range(m):
        for j in range(m):
            target = proj if i == j else np.zeros_like(proj)
            residuals[i, j] = np.max(np.abs(proj @ ops[j].conj().T @ ops[i] @ proj - target))
    return bool(residuals.max() < TOL.kl_residual), residuals


def measure_syndrome_and_correct(state: DensityOperator, code: StabilizerCode) -> list[SyndromeBranch]:
    """Exhaustive projective branching over every syndrome outcome.

    Branch probabilities sum to the input trace; corrections come from the
    code's lookup table. A branch with significant weight but no table entry
    means the noise left the supported error set.
    """
    if state.num_qubits != code.n:
        raise ValueError("state register does not match the code")
    branches = []
    for syndrome in product((0, 1), repeat=len(code.generators)):
        proj = code.syndrome_projector(syndrome)
        branch = proj @ state.matrix @ proj
        prob = float(np.trace(branch).real)
        correction = code.syndrome_table.get(syndrome)
        if correction is None and abs(prob) > 1e-12:
            raise ValueError(f"syndrome {syndrome} outside the supported error set (weight {prob})")
        branches.append(SyndromeBranch(syndrome, prob, DensityOperator(branch), correction))
    return branches


def load_generators(text: str) -> list[PauliString]:
    """Parse a code definition: one stabilizer generator label per line."""
    generators = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        generators.append(PauliString.from_label(line))
    if not generators:
        raise ValueError("no generators found")
    return generators
