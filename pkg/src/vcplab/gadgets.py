"""Circuit-level purification gadgets.

The virtual estimators are simulated by signed-operator propagation: the
control qubit is contracted against Pauli-X after each gadget block, which
yields an unnormalized Hermitian operator that propagates linearly through
later blocks. Register convention throughout: control qubit first, then
ancilla registers in ascending copy index, then the main register.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codes import StabilizerCode, kl_check, syndrome_of
from .config import TOL
from .densesim import (
    DensityOperator,
    GateOp,
    KrausChannel,
    _conjugate_permutation,
    _conjugate_unitary,
    _depolarize_qubit,
    _partial_trace_matrix,
    _left_mul,
    _right_mul,
    _permutation_from_table,
    expectation,
    maximally_entangled_ket,
)
from .pauli import (
    PauliChannel,
    apply_pauli_channel_matrix,
    depolarizing,
    tensor,
)


class EstimatorDegenerateError(RuntimeError):
    """Raised when the virtual denominator underflows (noise dominates)."""


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass
class VirtualState:
    """(numerator operator, denominator scalar) pair behind a ratio estimator.

    estimator(O) = Tr(O numerator) / denominator with denominator equal to
    the numerator trace, so estimator(identity) is 1 by construction.
    """

    numerator: DensityOperator
    denominator: float

    def __post_init__(self):
        tr = self.numerator.trace
        if abs(tr - self.denominator) > 1e-9 * max(1.0, abs(tr)):
            raise ValueError("denominator must equal the numerator trace")

    @classmethod
    def from_state(cls, state: DensityOperator) -> "VirtualState":
        return cls(state, state.trace)

    @property
    def num_qubits(self) -> int:
        return self.numerator.num_qubits

    def _check_denominator(self):
        if abs(self.denominator) < TOL.denominator_underflow:
            raise EstimatorDegenerateError(
                f"virtual denominator {self.denominator} below {TOL.denominator_underflow}"
            )

    def estimator(self, observable: np.ndarray, targets=None) -> float:
        self._check_denominator()
        return expectation(self.numerator, observable, targets) / self.denominator

    def normalized(self) -> DensityOperator:
        self._check_denominator()
        return DensityOperator(self.numerator.matrix / self.denominator, labels=self.numerator.labels)


@dataclass
class NoisyLayer:
    """Gates on the main register, each optionally followed by a Pauli channel
    on its own qubits."""

    num_qubits: int
    gates: list[GateOp]
    gate_noise: list[PauliChannel | None]
    depth: int = 1

    def __post_init__(self):
        if len(self.gates) != len(self.gate_noise):
            raise ValueError("gate_noise must parallel gates")
        for g, c in zip(self.gates, self.gate_noise):
            if max(g.targets, default=0) >= self.num_qubits:
                raise ValueError("gate targets must lie on the main register")
            if c is not None and c.num_qubits != len(g.targets):
                raise ValueError("noise arity must match its gate")

    def without_noise(self) -> "NoisyLayer":
        return NoisyLayer(self.num_qubits, list(self.gates), [None] * len(self.gates), self.depth)


def merge_layers(layers: list[NoisyLayer]) -> NoisyLayer:
    if not layers:
        raise ValueError("cannot merge an empty block")
    n = layers[0].num_qubits
    gates, noise = [], []
    for layer in layers:
        if layer.num_qubits != n:
            raise ValueError("layers act on different register sizes")
        gates.extend(layer.gates)
        noise.extend(layer.gate_noise)
    return NoisyLayer(n, gates, noise, depth=sum(l.depth for l in layers))


@dataclass
class GadgetNoise:
    """Noise attached to every controlled permutation in the gadget.

    cswap_noise acts on the control plus the M register qubits touched at one
    position (a 3-qubit product of depolarizing channels in the reference
    experiments). Placement selects which permutation layers are noisy.
    """

    cswap_noise: PauliChannel | None
    enabled: bool = True
    placement: str = "both"  # opening | closing | both

    def __post_init__(self):
        if self.placement not in ("opening", "closing", "both"):
            raise ValueError(f"unknown placement {self.placement!r}")

    @classmethod
    def depolarizing(cls, rate: float, order: int = 2, placement: str = "both") -> "GadgetNoise":
        chan = depolarizing(1, rate)
        noise = chan
        for _ in range(order):
            noise = tensor(noise, chan)
        return cls(noise, True, placement)

    def active(self) -> bool:
        return self.enabled and self.cswap_noise is not None

    def applies_to(self, stage: str) -> bool:
        return self.active() and self.placement in (stage, "both")


# ---------------------------------------------------------------------------
# fast application plumbing
# ---------------------------------------------------------------------------

_PERM_CACHE: dict = {}


def _cached_inverse_perm(n: int, targets: tuple[int, ...], table: np.ndarray) -> np.ndarray:
    key = (n, targets, table.tobytes())
    inv = _PERM_CACHE.get(key)
    if inv is None:
        perm = _permutation_from_table(n, targets, table)
        inv = np.empty_like(perm)
        inv[perm] = np.arange(len(perm))
        _PERM_CACHE[key] = inv
    return inv


def _cycle_table(order: int, inverse: bool) -> np.ndarray:
    """Truth table of the controlled register cycle on (control, r_0..r_{M-1})."""
    size = 2 ** (order + 1)
    table = np.arange(size, dtype=np.intp)
    for v in range(size):
        if not (v >> order) & 1:
            continue
        bits = [(v >> (order - 1 - k)) & 1 for k in range(order)]
        shifted = bits[1:] + bits[:1] if inverse else bits[-1:] + bits[:-1]
        nv = 1 << order
        for k, b in enumerate(shifted):
            nv |= b << (order - 1 - k)
        table[v] = nv
    return table


def _noise_plan(channel: PauliChannel):
    """Factor a channel into per-qubit depolarizing ops when possible.

    Returns a list of ("depol", local_qubit, rate) entries, or a single
    ("pauli", channel) fallback. Cached on the channel object.
    """
    plan = getattr(channel, "_dense_plan", None)
    if plan is not None:
        return plan
    plan = _build_noise_plan(channel)
    channel._dense_plan = plan
    return plan


def _build_noise_plan(channel: PauliChannel):
    k = channel.num_qubits
    margs = [{"I": 0.0, "X": 0.0, "Y": 0.0, "Z": 0.0} for _ in range(k)]
    for ps, p in channel.probs.items():
        for q, ch in enumerate(ps.label):
            margs[q][ch] += p
    rates = []
    for q in range(k):
        vals = [margs[q][c] for c in "XYZ"]
        if max(vals) - min(vals) > 1e-13:
            return [("pauli", channel)]
        rates.append(4.0 * vals[0])
    support = 0
    for ps, p in channel.probs.items():
        if p <= 0.0:
            continue
        support += 1
        prod = 1.0
        for q, ch in enumerate(ps.label):
            prod *= (1.0 - 0.75 * rates[q]) if ch == "I" else rates[q] / 4.0
        if abs(prod - p) > 1e-13:
            return [("pauli", channel)]
    expected = 1
    for r in rates:
        expected *= 1 if r == 0.0 else 4
    if support != expected:
        return [("pauli", channel)]
    return [("depol", q, r) for q, r in enumerate(rates) if r > 0.0]


def _apply_noise(mat: np.ndarray, channel: PauliChannel, targets: tuple[int, ...], n: int) -> np.ndarray:
    for entry in _noise_plan(channel):
        if entry[0] == "depol":
            mat = _depolarize_qubit(mat, targets[entry[1]], n, entry[2])
        else:
            mat = apply_pauli_channel_matrix(mat, entry[1], targets, n)
    return mat


def _apply_gate(mat: np.ndarray, gate: GateOp, targets: tuple[int, ...], n: int) -> np.ndarray:
    if gate._perm_table is not None:
        inv = _cached_inverse_perm(n, targets, gate._perm_table)
        return _conjugate_permutation(mat, inv)
    return _conjugate_unitary(mat, gate.matrix, targets, n)


def _apply_layer(mat: np.ndarray, layer: NoisyLayer, bases: list[int], n: int, with_noise: bool = True) -> np.ndarray:
    """Apply the layer's noisy gates transversally at every register base."""
    for gate, noise in zip(layer.gates, layer.gate_noise):
        for base in bases:
            targets = tuple(base + t for t in gate.targets)
            mat = _apply_gate(mat, gate, targets, n)
            if with_noise and noise is not None:
                mat = _apply_noise(mat, noise, targets, n)
    return mat


def _apply_controlled_cycle(
    mat: np.ndarray,
    n: int,
    reg_bases: list[int],
    num_main_qubits: int,
    inverse: bool,
    gadget_noise: GadgetNoise | None,
    stage: str,
) -> np.ndarray:
    """Controlled M-register cycle, one qubit position at a time.

    Each per-position controlled permutation may be followed by the
    configured CSWAP noise on the control and the touched qubits.
    """
    order = len(reg_bases)
    table = _cycle_table(order, inverse)
    noisy = gadget_noise is not None and gadget_noise.applies_to(stage)
    if noisy and gadget_noise.cswap_noise.num_qubits != order + 1:
        raise ValueError("cswap noise must act on control plus the M touched qubits")
    for q in range(num_main_qubits):
        targets = (0,) + tuple(base + q for base in reg_bases)
        inv = _cached_inverse_perm(n, targets, table)
        mat = _conjugate_permutation(mat, inv)
        if noisy:
            mat = _apply_noise(mat, gadget_noise.cswap_noise, targets, n)
    return mat


def _plus_projector_half() -> np.ndarray:
    return np.full((2, 2), 0.5, dtype=complex)


def _contract_control_x(mat: np.ndarray, n: int, keep: tuple[int, ...]) -> np.ndarray:
    """Tr over everything but `keep` of (X_control ⊗ I) rho."""
    d = mat.shape[0]
    perm = np.arange(d) ^ (d >> 1)  # X on qubit 0 permutes the top bit
    xmat = mat[perm, :]
    out = _partial_trace_matrix(xmat, keep, n)
    herm = np.max(np.abs(out - out.conj().T))
    if herm > 1e-10:
        raise AssertionError(f"signed contraction lost Hermiticity ({herm})")
    return (out + out.conj().T) / 2.0  # remove floating-point dust


# ---------------------------------------------------------------------------
# gadget runners
# ---------------------------------------------------------------------------

def _gadget_final_matrix(
    main_matrix: np.ndarray,
    num_qubits: int,
    layer: NoisyLayer,
    order: int,
    gadget_noise: GadgetNoise | None,
    ancilla_matrix: np.ndarray | None = None,
    with_layer_noise: bool = True,
    extra_ref_qubits: int = 0,
) -> tuple[np.ndarray, int]:
    """Evolve the full gadget register and return (final matrix, total qubits).

    Layout: control, M-1 ancilla registers, main register, then optional
    untouched reference qubits entangled with main.
    """
    n_reg = num_qubits
    n_total = 1 + order * n_reg + extra_ref_qubits
    anc = ancilla_matrix if ancilla_matrix is not None else np.eye(2**n_reg) / 2**n_reg
    full = _plus_projector_half()
    for _ in range(order - 1):
        full = np.kron(full, anc)
    full = np.kron(full, main_matrix)
    bases = [1 + m * n_reg for m in range(order)]  # ancillas then main
    full = _apply_controlled_cycle(full, n_total, bases, n_reg, False, gadget_noise, "opening")
    full = _apply_layer(full, layer, bases, n_total, with_noise=with_layer_noise)
    full = _apply_controlled_cycle(full, n_total, bases, n_reg, True, gadget_noise, "closing")
    return full, n_total


def vcp_virtual_apply(
    input_state: VirtualState,
    layer: NoisyLayer,
    order: int,
    gadget_noise: GadgetNoise | None = None,
) -> VirtualState:
    """One purification block: controlled cycle, M noisy channel copies
    applied transversally, inverse controlled cycle, then contraction of the
    control against X and discarding of the ancillas."""
    if order < 2:
        raise ValueError("purification order must be >= 2")
    n = layer.num_qubits
    if input_state.num_qubits != n:
        raise ValueError("input register does not match the layer")
    full, n_total = _gadget_final_matrix(input_state.numerator.matrix, n, layer, order, gadget_noise)
    main_base = 1 + (order - 1) * n
    numerator = _contract_control_x(full, n_total, tuple(range(main_base, main_base + n)))
    den = float(np.trace(numerator).real)
    out = VirtualState(DensityOperator(numerator), den)
    if abs(den) < TOL.denominator_underflow:
        raise EstimatorDegenerateError(f"virtual denominator {den} underflowed")
    return out


def split_blocks(num_layers: int, num_blocks: int) -> list[int]:
    """Balanced contiguous partition sizes."""
    if not 1 <= num_blocks <= num_layers:
        raise ValueError("block count must lie in [1, number of layers]")
    base, extra = divmod(num_layers, num_blocks)
    return [base + (1 if i < extra else 0) for i in range(num_blocks)]


def vcp_layered_run(
    circuit: list[NoisyLayer],
    layering: int | list[int],
    order: int,
    gadget_noise: GadgetNoise | None = None,
    input_state: VirtualState | None = None,
    ideal_reference: bool = False,
) -> VirtualState:
    """Fold the purification block over a partition of the circuit.

    Ancillas and the control qubit are fresh per block, so the total
    denominator is the product of the block denominators. With
    ideal_reference=True all noise is stripped, giving the exact estimator.
    """
    if not circuit:
        raise ValueError("empty circuit")
    blocks = split_blocks(len(circuit), layering) if isinstance(layering, int) else list(layering)
    if sum(blocks) != len(circuit) or any(b < 1 for b in blocks):
        raise ValueError("layering must partition the circuit in order")
    n = circuit[0].num_qubits
    state = input_state if input_state is not None else VirtualState.from_state(DensityOperator.zero_state(n))
    pos = 0
    for size in blocks:
        block = merge_layers(circuit[pos : pos + size])
        pos += size
        if ideal_reference:
            block = block.without_noise()
        state = vcp_virtual_apply(state, block, order, None if ideal_reference else gadget_noise)
    return state


def evolve_density(state: DensityOperator, circuit: list[NoisyLayer], with_noise: bool = True) -> DensityOperator:
    """Run a noisy circuit directly on one register (no purification)."""
    mat = state.matrix
    for layer in circuit:
        mat = _apply_layer(mat, layer, [0], state.num_qubits, with_noise=with_noise)
    return DensityOperator(mat, labels=state.labels)


def ideal_output_ket(circuit: list[NoisyLayer], num_qubits: int) -> np.ndarray:
    """Noiseless statevector output of the circuit from the all-zero state."""
    vec = np.zeros(2**num_qubits, dtype=complex)
    vec[0] = 1.0
    for layer in circuit:
        for gate in layer.gates:
            k = len(gate.targets)
            t = vec.reshape((2,) * num_qubits)
            a = gate.matrix.reshape((2,) * (2 * k))
            t = np.tensordot(a, t, axes=(tuple(range(k, 2 * k)), gate.targets))
            t = np.moveaxis(t, tuple(range(k)), gate.targets)
            vec = t.reshape(-1)
    return vec


def vsp_estimate(
    circuit: list[NoisyLayer],
    gadget_noise: GadgetNoise | None = None,
    observable: np.ndarray | None = None,
    input_state: DensityOperator | None = None,
) -> tuple[float | None, VirtualState]:
    """Virtual state purification with two noisy state copies and one CSWAP
    layer; the noiseless-CSWAP estimator equals Tr(O rho^2)/Tr(rho^2)."""
    n = circuit[0].num_qubits if circuit else (input_state.num_qubits if input_state else 0)
    rho0 = input_state if input_state is not None else DensityOperator.zero_state(n)
    rho = evolve_density(rho0, circuit) if circuit else rho0
    n_total = 1 + 2 * n
    full = np.kron(np.kron(_plus_projector_half(), rho.matrix), rho.matrix)
    full = _apply_controlled_cycle(full, n_total, [1, 1 + n], n, False, gadget_noise, "closing")
    numerator = _contract_control_x(full, n_total, tuple(range(1 + n, 1 + 2 * n)))
    den = float(np.trace(numerator).real)
    state = VirtualState(DensityOperator(numerator), den)
    if abs(den) < TOL.denominator_underflow:
        raise EstimatorDegenerateError(f"virtual denominator {den} underflowed")
    est = state.estimator(observable) if observable is not None else None
    return est, state


def generalized_gadget(
    input_state: VirtualState,
    layer: NoisyLayer,
    sigma: DensityOperator,
    ancilla_observable: np.ndarray,
    order: int = 2,
    gadget_noise: GadgetNoise | None = None,
    include_opening: bool = True,
) -> VirtualState:
    """Purification block with ancilla input sigma and ancilla measurement S.

    Reduces to vcp_virtual_apply at sigma = I/2^N, S = I; removing the
    opening permutation with sigma equal to a pure input state recovers
    virtual state purification.
    """
    if order < 2:
        raise ValueError("purification order must be >= 2")
    n = layer.num_qubits
    if sigma.num_qubits != n:
        raise ValueError("ancilla state must match the register size")
    s_obs = np.asarray(ancilla_observable, dtype=complex)
    if s_obs.shape != (2**n, 2**n):
        raise ValueError("ancilla observable dimension mismatch")

    n_total = 1 + order * n
    full = _plus_projector_half()
    for _ in range(order - 1):
        full = np.kron(full, sigma.matrix)
    full = np.kron(full, input_state.numerator.matrix)
    bases = [1 + m * n for m in range(order)]
    if include_opening:
        full = _apply_controlled_cycle(full, n_total, bases, n, False, gadget_noise, "opening")
    full = _apply_layer(full, layer, bases, n_total)
    full = _apply_controlled_cycle(full, n_total, bases, n, True, gadget_noise, "closing")
    for m in range(order - 1):
        anc = tuple(range(1 + m * n, 1 + (m + 1) * n))
        full = _left_mul(full, s_obs, anc, n_total)
    main_base = 1 + (order - 1) * n
    numerator = _contract_control_x(full, n_total, tuple(range(main_base, main_base + n)))
    den = float(np.trace(numerator).real)
    out = VirtualState(DensityOperator(numerator), den)
    if abs(den) < TOL.denominator_underflow:
        raise EstimatorDegenerateError(f"virtual denominator {den} underflowed")
    return out


def ancilla_condition_matrix(
    sigma: DensityOperator,
    ancilla_observable: np.ndarray,
    kraus: KrausChannel,
    unitary: np.ndarray | None = None,
) -> "AncillaConditionReport":
    """Evaluate A_ij = Tr(E_i U sigma U† E_j† S) against the three targets:
    purification (delta_ij), full noise removal (delta_i0 delta_j0) and state
    verification (p_i delta_ij)."""
    s_obs = np.asarray(ancilla_observable, dtype=complex)
    u = np.eye(sigma.matrix.shape[0], dtype=complex) if unitary is None else np.asarray(unitary, dtype=complex)
    rotated = u @ sigma.matrix @ u.conj().T
    ops = kraus.operators
    m = len(ops)
    a = np.empty((m, m), dtype=complex)
    for i in range(m):
        for j in range(m):
            a[i, j] = np.trace(ops[i] @ rotated @ ops[j].conj().T @ s_obs)
    eye = np.eye(m)
    removal = np.zeros((m, m))
    removal[0, 0] = 1.0
    verification = np.diag(kraus.weights)
    return AncillaConditionReport(
        matrix=a,
        purification_residual=float(np.max(np.abs(a - eye))),
        removal_residual=float(np.max(np.abs(a - removal))),
        verification_residual=float(np.max(np.abs(a - verification))),
        max_off_diagonal=float(np.max(np.abs(a - np.diag(np.diag(a))))) if m > 1 else 0.0,
    )


@dataclass
class AncillaConditionReport:
    matrix: np.ndarray
    purification_residual: float
    removal_residual: float
    verification_residual: float
    max_off_diagonal: float


def channel_layer(channel: PauliChannel, unitary: np.ndarray | None = None) -> NoisyLayer:
    """Layer realizing one noisy operation: ideal unitary followed by noise."""
    n = channel.num_qubits
    u = np.eye(2**n, dtype=complex) if unitary is None else np.asarray(unitary, dtype=complex)
    return NoisyLayer(n, [GateOp("unitary", tuple(range(n)), u)], [channel])


# ---------------------------------------------------------------------------
# post-selected (physical) channel purification
# ---------------------------------------------------------------------------

def post_selected_gadget_choi(
    channel: PauliChannel,
    order: int,
    gadget_noise: GadgetNoise | None = None,
) -> tuple[DensityOperator, float]:
    """Choi state of the channel obtained by keeping the + control outcome.

    The main register is fed half of a maximally entangled pair; the
    reference half bypasses the gadget. Returns the normalized Choi state and
    the + outcome probability.
    """
    if order < 2:
        raise ValueError("purification order must be >= 2")
    n = channel.num_qubits
    phi = maximally_entangled_ket(n)
    full, n_total = _gadget_final_matrix(
        np.outer(phi, phi.conj()),
        n,
        channel_layer(channel),
        order,
        gadget_noise,
        extra_ref_qubits=n,
    )
    plus = _plus_projector_half()
    full = _right_mul(_left_mul(full, plus, (0,), n_total), plus, (0,), n_total)
    main_and_ref = tuple(range(1 + (order - 1) * n, 1 + (order + 1) * n))
    branch = _partial_trace_matrix(full, main_and_ref, n_total)
    p_plus = float(np.trace(branch).real)
    return DensityOperator(branch / p_plus), p_plus


# ---------------------------------------------------------------------------
# merge with quantum error correction
# ---------------------------------------------------------------------------

def qec_merge_run(
    rho: DensityOperator,
    code: StabilizerCode,
    noise: PauliChannel,
    gadget_noise: GadgetNoise | None = None,
    post_select_trivial: bool = False,
    code_state: DensityOperator | None = None,
) -> tuple[DensityOperator, float]:
    """Second-order gadget with a code-state ancilla, stabilizer measurement
    on the ancilla and syndrome-indexed correction applied to the main
    register (or post-selection on the trivial syndrome).

    For noise correctable by the code the output operator is
    (sum_j p_j^2) rho, and the sampling factor is the inverse square of that
    trace ratio.
    """
    n = code.n
    if rho.num_qubits != n or noise.num_qubits != n:
        raise ValueError("state, code and noise must share one register size")
    support = list(noise.probs.keys())
    passed, residuals = kl_check(code, support)
    if not passed:
        raise ValueError(f"code is not non-degenerate for the noise support (residual {residuals.max()})")
    for err in support:
        if syndrome_of(err, code.generators) not in code.syndrome_table:
            raise ValueError(f"noise term {err.label} falls outside the syndrome table")
    sigma = code_state.matrix if code_state is not None else code.code_projector / code.projector_rank()

    full, n_total = _gadget_final_matrix(rho.matrix, n, channel_layer(noise), 2, gadget_noise, ancilla_matrix=sigma)
    joint = _contract_control_x(full, n_total, tuple(range(1, 1 + 2 * n)))  # (ancilla, main) signed operator

    out = np.zeros((2**n, 2**n), dtype=complex)
    joint_qubits = 2 * n
    for syndrome, correction in sorted(code.syndrome_table.items()):
        if post_select_trivial and any(syndrome):
            continue
        proj = code.syndrome_projector(syndrome)
        anc_targets = tuple(range(n))
        branch = _right_mul(_left_mul(joint, proj, anc_targets, joint_qubits), proj, anc_targets, joint_qubits)
        if not post_select_trivial:
            corr = correction.matrix()
            main_targets = tuple(range(n, 2 * n))
            branch = _conjugate_unitary(branch, corr, main_targets, joint_qubits)
        out += _partial_trace_matrix(branch, tuple(range(n, 2 * n)), joint_qubits)

    factor = float(np.trace(out).real) / rho.trace
    if factor <= 0.0:
        raise EstimatorDegenerateError("merged-gadget trace factor is not positive")
    return DensityOperator((out + out.conj().T) / 2.0), factor**-2


# ---------------------------------------------------------------------------
# coherent / incoherent SWAP detectors
# ---------------------------------------------------------------------------

@dataclass
class OperatorMap:
    """A completely positive map given by explicit branch operators."""

    num_qubits: int
    operators: list[np.ndarray]

    def apply(self, rho) -> np.ndarray:
        mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
        out = np.zeros_like(mat)
        for a in self.operators:
            out += a @ mat @ a.conj().T
        return out

    def branch_probability(self, rho) -> float:
        return float(np.trace(self.apply(rho)).real)

    def choi(self) -> np.ndarray:
        phi = maximally_entangled_ket(self.num_qubits)
        state = np.outer(phi, phi.conj())
        n_total = 2 * self.num_qubits
        out = np.zeros_like(state)
        targets = tuple(range(self.num_qubits))
        for a in self.operators:
            out += _right_mul(_left_mul(state, a, targets, n_total), a.conj().T, targets, n_total)
        return out


def _check_involution(g: np.ndarray, num_qubits: int) -> np.ndarray:
    g = np.asarray(g, dtype=complex)
    d = 2**num_qubits
    if g.shape != (d, d):
        raise ValueError("involution dimension mismatch")
    if np.max(np.abs(g @ g - np.eye(d))) > TOL.unitarity:
        raise ValueError("G must square to the identity")
    return g


def coherent_detector(noise: KrausChannel, involution: np.ndarray, outcome: str) -> OperatorMap:
    """Branch map after post-selecting the control on |+> or |->.

    K_{i,+-} = (K_i +- G K_i G)/2. The two outcomes recompose the original
    channel whenever conjugation by G permutes the Kraus set (true for the
    tensor-square channels the SWAP detector probes).
    """
    if outcome not in ("+", "-"):
        raise ValueError("outcome must be '+' or '-'")
    g = _check_involution(involution, noise.num_qubits)
    sign = 1.0 if outcome == "+" else -1.0
    ops = []
    for p, e in zip(noise.weights, noise.operators):
        k = np.sqrt(p) * e
        ops.append((k + sign * (g @ k @ g)) / 2.0)
    return OperatorMap(noise.num_qubits, ops)


def incoherent_detector(noise: KrausChannel, involution: np.ndarray, parity: str, sign: str) -> OperatorMap:
    """Branch map for two consecutive projective checks of G.

    Even parity keeps Pi_s K_i Pi_s, odd parity Pi_s K_i Pi_{-s}; on top of
    removing the wrong-symmetry noise components, the incoherent detector
    projects the incoming and outgoing states into G eigenspaces.
    """
    if parity not in ("even", "odd"):
        raise ValueError("parity must be 'even' or 'odd'")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    g = _check_involution(involution, noise.num_qubits)
    d = g.shape[0]
    pi = {"+": (np.eye(d) + g) / 2.0, "-": (np.eye(d) - g) / 2.0}
    left = pi[sign]
    right = pi[sign] if parity == "even" else pi["-" if sign == "+" else "+"]
    ops = []
    for p, e in zip(noise.weights, noise.operators):
        ops.append(left @ (np.sqrt(p) * e) @ right)
    return OperatorMap(noise.num_qubits, ops)
