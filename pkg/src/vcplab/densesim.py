"""Dense density-operator engine.

States are exact complex matrices over a register of qubits. Qubit 0 is the
first (most significant) tensor factor, matching circuit diagrams drawn with
the control qubit on top. All operations are pure functions; the largest
register used anywhere in the package is 11 qubits, so dense matrices are
both exact and fast enough.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from . import _kernels
from .config import TOL

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI_1Q = {"I": I2, "X": PAULI_X, "Y": PAULI_Y, "Z": PAULI_Z}

CNOT_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


def _as_complex_matrix(m) -> np.ndarray:
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return a


def _num_qubits_of(dim: int) -> int:
    n = dim.bit_length() - 1
    if 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


def is_hermitian(m: np.ndarray, tol: float = TOL.hermiticity) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def is_unitary(m: np.ndarray, tol: float = TOL.unitarity) -> bool:
    d = m.shape[0]
    return bool(np.max(np.abs(m.conj().T @ m - np.eye(d))) <= tol)


# ---------------------------------------------------------------------------
# raw ndarray kernels (no validation; used by the gadget hot loops)
# ---------------------------------------------------------------------------

def _left_mul(mat: np.ndarray, op: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """op (embedded on targets) @ mat."""
    k = len(targets)
    d = mat.shape[0]
    t = mat.reshape((2,) * (2 * n))
    a = op.reshape((2,) * (2 * k))
    t = np.tensordot(a, t, axes=(tuple(range(k, 2 * k)), targets))
    t = np.moveaxis(t, tuple(range(k)), targets)
    return t.reshape(d, d)


def _right_mul(mat: np.ndarray, op: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    """mat @ op (embedded on targets)."""
    k = len(targets)
    d = mat.shape[0]
    t = mat.reshape((2,) * (2 * n))
    b = op.reshape((2,) * (2 * k))
    col_axes = tuple(n + q for q in targets)
    t = np.tensordot(t, b, axes=(col_axes, tuple(range(k))))
    t = np.moveaxis(t, tuple(range(2 * n - k, 2 * n)), col_axes)
    return t.reshape(d, d)


def _conjugate_unitary(mat: np.ndarray, u: np.ndarray, targets: tuple[int, ...], n: int) -> np.ndarray:
    if len(targets) == 1:
        return _kernels.su2_conjugate(mat, u, targets[0])
    return _right_mul(_left_mul(mat, u, targets, n), u.conj().T, targets, n)


def _conjugate_permutation(mat: np.ndarray, inv_perm: np.ndarray) -> np.ndarray:
    """U rho U† for a basis-permutation unitary U|a> = |pi(a)>, inv_perm = pi^-1."""
    return _kernels.permutation_conjugate(mat, inv_perm)


def _permutation_from_table(n: int, targets: tuple[int, ...], table: np.ndarray) -> np.ndarray:
    """Full-register permutation pi from a truth table on the target bits.

    table[b] is the output bit pattern for input pattern b, both in
    MSB-first target order.
    """
    k = len(targets)
    idx = np.arange(2**n)
    tbits = np.zeros_like(idx)
    for pos, q in enumerate(targets):
        tbits |= ((idx >> (n - 1 - q)) & 1) << (k - 1 - pos)
    out_tbits = table[tbits]
    out = idx.copy()
    for pos, q in enumerate(targets):
        shift = n - 1 - q
        bit = (out_tbits >> (k - 1 - pos)) & 1
        out = (out & ~(1 << shift)) | (bit << shift)
    return out


def _depolarize_qubit(mat: np.ndarray, q: int, n: int, prob: float) -> np.ndarray:
    """Single-qubit depolarizing: rho -> (1-P) rho + P (I/2 (x) tr_q rho)."""
    return _kernels.depolarize_qubit(mat, q, prob)


def _partial_trace_matrix(mat: np.ndarray, keep: tuple[int, ...], n: int) -> np.ndarray:
    t = mat.reshape((2,) * (2 * n))
    sub = list(range(2 * n))
    for q in range(n):
        if q not in keep:
            sub[n + q] = sub[q]
    out_sub = [q for q in keep] + [sub[n + q] for q in keep]
    return np.einsum(t, sub, out_sub).reshape(2 ** len(keep), 2 ** len(keep))


def embed_operator(n: int, targets: tuple[int, ...], op: np.ndarray) -> np.ndarray:
    """Full 2^n matrix acting as `op` on `targets` and identity elsewhere."""
    k = len(targets)
    rest = tuple(q for q in range(n) if q not in targets)
    full = np.kron(op, np.eye(2 ** (n - k), dtype=complex))
    # full is written in qubit order targets + rest; gather back to natural order
    order = targets + rest
    pos = np.zeros(2**n, dtype=np.intp)
    for newbit, q in enumerate(order):
        pos |= ((np.arange(2**n) >> (n - 1 - q)) & 1) << (n - 1 - newbit)
    return full[np.ix_(pos, pos)]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass
class DensityOperator:
    """Hermitian operator over a labeled qubit register.

    Physical states have unit trace and non-negative spectrum; signed
    (virtual) operators may have any real trace but stay Hermitian.
    """

    matrix: np.ndarray
    num_qubits: int | None = None
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        self.matrix = _as_complex_matrix(self.matrix)
        n = _num_qubits_of(self.matrix.shape[0])
        if self.num_qubits is None:
            self.num_qubits = n
        elif self.num_qubits != n:
            raise ValueError(f"matrix dimension {self.matrix.shape[0]} does not match {self.num_qubits} qubits")
        if self.labels is not None and len(self.labels) != self.num_qubits:
            raise ValueError("label count must match qubit count")
        if not is_hermitian(self.matrix):
            raise ValueError("density operator must be Hermitian within tolerance")

    @classmethod
    def pure(cls, ket, labels=None) -> "DensityOperator":
        v = np.asarray(ket, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()), labels=labels)

    @classmethod
    def zero_state(cls, num_qubits: int, labels=None) -> "DensityOperator":
        v = np.zeros(2**num_qubits, dtype=complex)
        v[0] = 1.0
        return cls.pure(v, labels=labels)

    @classmethod
    def maximally_mixed(cls, num_qubits: int, labels=None) -> "DensityOperator":
        d = 2**num_qubits
        return cls(np.eye(d, dtype=complex) / d, labels=labels)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def is_physical(self, trace_tol: float = TOL.state_trace, psd_tol: float = TOL.psd) -> bool:
        if abs(self.trace - 1.0) > trace_tol:
            return False
        return bool(np.linalg.eigvalsh(self.matrix).min() >= -psd_tol)

    def tensor(self, other: "DensityOperator") -> "DensityOperator":
        labels = None
        if self.labels is not None and other.labels is not None:
            labels = self.labels + other.labels
        return DensityOperator(np.kron(self.matrix, other.matrix), labels=labels)


@dataclass
class KrausChannel:
    """Channel in the normalized Kraus convention.

    Each term is a weight p_i with an operator E_i obeying
    Tr(E_i† E_i) = 2^N, so the weights form a probability distribution for
    trace-preserving channels. Terms are kept in descending weight order.
    """

    num_qubits: int
    weights: np.ndarray
    operators: list[np.ndarray]

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        self.operators = [_as_complex_matrix(e) for e in self.operators]
        d = 2**self.num_qubits
        if len(self.operators) != len(self.weights):
            raise ValueError("weights and operators must pair up")
        if np.any(self.weights < -1e-15):
            raise ValueError("weights must be non-negative")
        order = np.argsort(-self.weights, kind="stable")
        self.weights = np.maximum(self.weights[order], 0.0)
        self.operators = [self.operators[i] for i in order]
        for e in self.operators:
            if e.shape[0] != d:
                raise ValueError("operator dimension mismatch")
            if abs(np.trace(e.conj().T @ e).real - d) > TOL.trace_preservation:
                raise ValueError("operators must satisfy Tr(E†E) = 2^N")
        tp = sum(p * (e.conj().T @ e) for p, e in zip(self.weights, self.operators))
        if np.max(np.abs(tp - np.eye(d))) > TOL.trace_preservation:
            raise ValueError("channel is not trace preserving")

    @classmethod
    def from_operators(cls, kraus_ops, num_qubits: int | None = None) -> "KrausChannel":
        """Build from standard (unnormalized) Kraus operators K_i."""
        ops = [_as_complex_matrix(k) for k in kraus_ops]
        d = ops[0].shape[0]
        n = num_qubits if num_qubits is not None else _num_qubits_of(d)
        weights, normalized = [], []
        for k in ops:
            p = float(np.trace(k.conj().T @ k).real) / d
            if p < 1e-15:
                continue
            weights.append(p)
            normalized.append(k / np.sqrt(p))
        return cls(n, np.array(weights), normalized)

    @classmethod
    def from_unitary(cls, u: np.ndarray) -> "KrausChannel":
        u = _as_complex_matrix(u)
        return cls(_num_qubits_of(u.shape[0]), np.array([1.0]), [u])

    def orthogonality_residual(self) -> float:
        """Max deviation of Tr(E_i E_j†)/2^N from delta_ij.

        Zero means the representation is stochastic noise (Pauli-like);
        a nonzero residual flags channels whose purification would not be
        properly normalized.
        """
        d = 2**self.num_qubits
        m = len(self.operators)
        worst = 0.0
        for i in range(m):
            for j in range(m):
                val = np.trace(self.operators[i] @ self.operators[j].conj().T) / d
                worst = max(worst, abs(val - (1.0 if i == j else 0.0)))
        return float(worst)


@dataclass
class GateOp:
    """A unitary circuit element on an explicit set of target qubits."""

    kind: str
    targets: tuple[int, ...]
    matrix: np.ndarray
    _perm_table: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.targets = tuple(self.targets)
        self.matrix = _as_complex_matrix(self.matrix)
        if len(set(self.targets)) != len(self.targets):
            raise ValueError("gate targets must be distinct")
        if self.matrix.shape[0] != 2 ** len(self.targets):
            raise ValueError("gate matrix dimension does not match target count")
        if not is_unitary(self.matrix):
            raise ValueError("gate matrix must be unitary within tolerance")
        self._perm_table = _permutation_table_of(self.matrix)

    @classmethod
    def single(cls, qubit: int, matrix: np.ndarray, kind: str = "unitary") -> "GateOp":
        return cls(kind, (qubit,), matrix)

    @classmethod
    def cnot(cls, control: int, target: int) -> "GateOp":
        return cls("cnot", (control, target), CNOT_MATRIX)

    @classmethod
    def cswap(cls, control: int, a: int, b: int) -> "GateOp":
        m = np.eye(8, dtype=complex)
        m[[5, 6]] = m[[6, 5]]
        return cls("cswap", (control, a, b), m)


def _permutation_table_of(matrix: np.ndarray) -> np.ndarray | None:
    """Truth table if the unitary is a basis permutation, else None."""
    d = matrix.shape[0]
    if not np.allclose(matrix, np.abs(matrix) * (np.abs(matrix) > 0.5), atol=1e-12):
        return None
    cols, rows = [], []
    for j in range(d):
        nz = np.flatnonzero(np.abs(matrix[:, j]) > 0.5)
        if len(nz) != 1 or abs(matrix[nz[0], j] - 1.0) > 1e-12:
            return None
        cols.append(j)
        rows.append(nz[0])
    table = np.empty(d, dtype=np.intp)
    table[cols] = rows
    return table


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def _check_targets(targets, num_qubits):
    targets = tuple(targets)
    if len(set(targets)) != len(targets):
        raise ValueError("targets must be distinct")
    for t in targets:
        if not 0 <= t < num_qubits:
            raise ValueError(f"target {t} out of range for {num_qubits} qubits")
    return targets


def apply_unitary(state: DensityOperator, gate: GateOp) -> DensityOperator:
    """U rho U† with the gate embedded on its targets."""
    targets = _check_targets(gate.targets, state.num_qubits)
    if gate._perm_table is not None:
        perm = _permutation_from_table(state.num_qubits, targets, gate._perm_table)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        out = _conjugate_permutation(state.matrix, inv)
    else:
        out = _conjugate_unitary(state.matrix, gate.matrix, targets, state.num_qubits)
    return DensityOperator(out, labels=state.labels)


def apply_channel(state: DensityOperator, channel: KrausChannel, targets) -> DensityOperator:
    """Sum_i p_i E_i rho E_i† on the target qubits."""
    targets = _check_targets(targets, state.num_qubits)
    if len(targets) != channel.num_qubits:
        raise ValueError("channel qubit count must equal the number of targets")
    n = state.num_qubits
    out = np.zeros_like(state.matrix)
    for p, e in zip(channel.weights, channel.operators):
        if p == 0.0:
            continue
        out += p * _conjugate_unitary(state.matrix, e, targets, n)
    if abs(np.trace(out).real - state.trace) > TOL.trace_preservation:
        raise ValueError("channel application failed to preserve the trace")
    return DensityOperator(out, labels=state.labels)


def partial_trace(state: DensityOperator, keep) -> DensityOperator:
    """Reduced operator over `keep`; kept qubits keep their relative order."""
    keep = _check_targets(keep, state.num_qubits)
    if len(keep) == 0:
        raise ValueError("keep must be a nonempty subset of the register")
    keep = tuple(sorted(keep))
    out = _partial_trace_matrix(state.matrix, keep, state.num_qubits)
    labels = tuple(state.labels[q] for q in keep) if state.labels is not None else None
    return DensityOperator(out, labels=labels)


def expectation(state: DensityOperator, observable: np.ndarray, targets=None) -> float:
    """Tr(O rho), with O acting on `targets` (defaults to the whole register)."""
    obs = _as_complex_matrix(observable)
    if not is_hermitian(obs):
        raise ValueError("observable must be Hermitian within tolerance")
    if targets is None:
        reduced = state.matrix
    else:
        targets = _check_targets(targets, state.num_qubits)
        reduced = _partial_trace_matrix(state.matrix, tuple(sorted(targets)), state.num_qubits)
    value = complex(np.trace(obs @ reduced))
    if abs(value.imag) > TOL.imag_expectation:
        raise ValueError(f"expectation value has imaginary residue {value.imag}")
    return float(value.real)


def von_neumann_entropy(state: DensityOperator) -> float:
    """Entropy -sum lambda log2 lambda in bits; eigenvalue dust is clamped."""
    evals = np.linalg.eigvalsh(state.matrix)
    if evals.min() < -TOL.psd:
        raise ValueError(f"state has negative eigenvalue {evals.min()}")
    evals = evals[evals > TOL.entropy_clamp]
    return float(-(evals * np.log2(evals)).sum()) if len(evals) else 0.0


def maximally_entangled_ket(num_qubits: int) -> np.ndarray:
    """|Phi+> = sum_i |ii> / sqrt(2^N) over a 2N-qubit register."""
    d = 2**num_qubits
    v = np.zeros(d * d, dtype=complex)
    v[np.arange(d) * d + np.arange(d)] = 1.0 / np.sqrt(d)
    return v


def choi_state(channel) -> DensityOperator:
    """(E (x) Id)(|Phi+><Phi+|) over 2N qubits, channel acting on the first N."""
    from . import pauli  # local import: pauli depends on densesim

    if isinstance(channel, pauli.PauliChannel):
        channel = pauli.to_kraus(channel)
    n = channel.num_qubits
    phi = maximally_entangled_ket(n)
    state = DensityOperator(np.outer(phi, phi.conj()))
    return apply_channel(state, channel, tuple(range(n)))


def twirl(channel: KrausChannel) -> "pauli.PauliChannel":
    """Pauli twirl via the closed-form overlap p_Q = sum_i p_i |Tr(Q E_i)|^2 / 4^N."""
    from . import pauli  # local import: pauli depends on densesim

    n = channel.num_qubits
    d = 2**n
    probs = {}
    for q in pauli.all_pauli_strings(n):
        qm = q.matrix()
        total = 0.0
        for p, e in zip(channel.weights, channel.operators):
            total += p * abs(np.sum(qm.T * e)) ** 2  # Tr(Q E) via elementwise sum
        val = total / d**2
        if val > 1e-15:
            probs[q] = val
    return pauli.PauliChannel(n, probs)
