"""Pauli-string and Pauli-channel algebra.

A Pauli channel is a probability distribution over Pauli strings; all of the
purification arithmetic (power weights, post-selected mixing, tensor
products) is exact on the channel's support. Channels can also be applied
directly to dense operators via index/sign manipulation, which is much
faster than a generic Kraus sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .config import TOL
from .densesim import DensityOperator, KrausChannel, PAULI_1Q, _check_targets

_XZ_TO_LABEL = {(0, 0): "I", (1, 0): "X", (1, 1): "Y", (0, 1): "Z"}
_LABEL_TO_XZ = {v: k for k, v in _XZ_TO_LABEL.items()}


@dataclass(frozen=True, order=True)
class PauliString:
    """An N-qubit Pauli operator in bit-packed X/Z form (phase-free).

    Qubit 0 is the first label character; bit (N-1-q) of each mask belongs
    to qubit q. Distinct strings are trace-orthogonal:
    Tr(E_i E_j†)/2^N = delta_ij.
    """

    num_qubits: int
    x_bits: int
    z_bits: int

    def __post_init__(self):
        mask = (1 << self.num_qubits) - 1
        if self.x_bits & ~mask or self.z_bits & ~mask:
            raise ValueError("bit masks exceed the qubit count")

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        x = z = 0
        for ch in label:
            try:
                xb, zb = _LABEL_TO_XZ[ch]
            except KeyError:
                raise ValueError(f"invalid Pauli label character {ch!r}") from None
            x = (x << 1) | xb
            z = (z << 1) | zb
        return cls(len(label), x, z)

    @classmethod
    def identity(cls, num_qubits: int) -> "PauliString":
        return cls(num_qubits, 0, 0)

    @property
    def label(self) -> str:
        chars = []
        for q in range(self.num_qubits):
            shift = self.num_qubits - 1 - q
            chars.append(_XZ_TO_LABEL[((self.x_bits >> shift) & 1, (self.z_bits >> shift) & 1)])
        return "".join(chars)

    @property
    def is_identity(self) -> bool:
        return self.x_bits == 0 and self.z_bits == 0

    @property
    def weight(self) -> int:
        return bin(self.x_bits | self.z_bits).count("1")

    def commutes_with(self, other: "PauliString") -> bool:
        sym = bin(self.x_bits & other.z_bits).count("1") + bin(self.z_bits & other.x_bits).count("1")
        return sym % 2 == 0

    def matrix(self) -> np.ndarray:
        m = np.array([[1.0 + 0j]])
        for ch in self.label:
            m = np.kron(m, PAULI_1Q[ch])
        return m

    def tensor(self, other: "PauliString") -> "PauliString":
        n = self.num_qubits + other.num_qubits
        return PauliString(
            n,
            (self.x_bits << other.num_qubits) | other.x_bits,
            (self.z_bits << other.num_qubits) | other.z_bits,
        )


def all_pauli_strings(num_qubits: int):
    """All 4^N Pauli strings in lexicographic label order."""
    for labels in product("IXYZ", repeat=num_qubits):
        yield PauliString.from_label("".join(labels))


@dataclass
class PauliChannel:
    """Probability distribution over Pauli strings.

    Constructors reject probability sums outside 1 +- tolerance rather than
    silently rescaling; identity dominance is only checked by operations
    whose contracts need it.
    """

    num_qubits: int
    probs: dict[PauliString, float]

    def __post_init__(self):
        total = 0.0
        clean = {}
        for ps, p in sorted(self.probs.items(), key=lambda kv: kv[0].label):
            if ps.num_qubits != self.num_qubits:
                raise ValueError("Pauli string qubit count mismatch")
            if p < -1e-15:
                raise ValueError(f"negative probability {p} for {ps.label}")
            total += p
            clean[ps] = float(p)
        if abs(total - 1.0) > TOL.prob_sum:
            raise ValueError(f"probabilities sum to {total}, not 1")
        self.probs = clean

    @property
    def identity_weight(self) -> float:
        return self.probs.get(PauliString.identity(self.num_qubits), 0.0)

    @property
    def error_weight(self) -> float:
        return 1.0 - self.identity_weight

    def is_identity_dominant(self) -> bool:
        p0 = self.identity_weight
        return all(p0 > p for ps, p in self.probs.items() if not ps.is_identity)

    def probability(self, label: str) -> float:
        return self.probs.get(PauliString.from_label(label), 0.0)


def channel_from_labels(probs: dict[str, float]) -> PauliChannel:
    keys = list(probs)
    n = len(keys[0])
    return PauliChannel(n, {PauliString.from_label(k): v for k, v in probs.items()})


# ---------------------------------------------------------------------------
# purification arithmetic
# ---------------------------------------------------------------------------

def purify(channel: PauliChannel, order: int) -> PauliChannel:
    """Purified channel with probabilities p_i^M / sum_k p_k^M."""
    if order < 1:
        raise ValueError("purification order must be >= 1")
    if order == 1:
        return PauliChannel(channel.num_qubits, dict(channel.probs))
    powers = {ps: p**order for ps, p in channel.probs.items()}
    norm = sum(powers.values())
    return PauliChannel(channel.num_qubits, {ps: v / norm for ps, v in powers.items()})


def p_m(channel: PauliChannel, order: int) -> float:
    """Normalizing constant P_M = sum_i p_i^M of the purified channel."""
    return float(sum(p**order for p in channel.probs.values()))


def depolarizing(num_qubits: int, prob: float) -> PauliChannel:
    """Channel mapping any input to the maximally mixed state with probability P."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError("depolarizing probability must lie in [0, 1]")
    dim4 = 4**num_qubits
    probs = {}
    for ps in all_pauli_strings(num_qubits):
        if ps.is_identity:
            probs[ps] = 1.0 - prob * (1.0 - 1.0 / dim4)
        elif prob > 0.0:
            probs[ps] = prob / dim4
    return PauliChannel(num_qubits, probs)


def tensor(a: PauliChannel, b: PauliChannel) -> PauliChannel:
    """Product distribution on concatenated Pauli strings."""
    probs = {}
    for pa, va in a.probs.items():
        for pb, vb in b.probs.items():
            probs[pa.tensor(pb)] = va * vb
    return PauliChannel(a.num_qubits + b.num_qubits, probs)


def compose(a: PauliChannel, b: PauliChannel) -> PauliChannel:
    """Channel composition a∘b on the same register (phase-free string product)."""
    if a.num_qubits != b.num_qubits:
        raise ValueError("channels must act on the same number of qubits")
    probs: dict[PauliString, float] = {}
    for pa, va in a.probs.items():
        for pb, vb in b.probs.items():
            ps = PauliString(a.num_qubits, pa.x_bits ^ pb.x_bits, pa.z_bits ^ pb.z_bits)
            probs[ps] = probs.get(ps, 0.0) + va * vb
    return PauliChannel(a.num_qubits, probs)


def post_selected(channel: PauliChannel, order: int) -> tuple[PauliChannel, float]:
    """Effective channel (E + P_M E^(M)) / (1 + P_M) after keeping the + outcome.

    Returns the mixed channel together with the success probability
    p_+ = (1 + P_M) / 2.
    """
    if order < 2:
        raise ValueError("post-selected mixing needs order >= 2")
    pm = p_m(channel, order)
    probs = {ps: (p + p**order) / (1.0 + pm) for ps, p in channel.probs.items()}
    return PauliChannel(channel.num_qubits, probs), (1.0 + pm) / 2.0


def to_kraus(channel: PauliChannel) -> KrausChannel:
    """Normalized Kraus form: weights = probabilities, operators = Pauli matrices."""
    items = sorted(channel.probs.items(), key=lambda kv: (-kv[1], kv[0].label))
    weights = np.array([p for _, p in items])
    operators = [ps.matrix() for ps, _ in items]
    return KrausChannel(channel.num_qubits, weights, operators)


# ---------------------------------------------------------------------------
# fast dense application
# ---------------------------------------------------------------------------

@lru_cache(maxsize=1024)
def _gather_perm(n: int, x_mask: int) -> np.ndarray:
    # read-only cache entry
    return np.arange(2**n) ^ x_mask


@lru_cache(maxsize=1024)
def _sign_vector(n: int, z_mask: int) -> np.ndarray:
    # read-only cache entry; (-1)^{popcount(i & z_mask)}
    idx = np.arange(2**n)
    par = np.zeros(2**n, dtype=np.int64)
    b = 0
    zm = z_mask
    while zm:
        if zm & 1:
            par ^= (idx >> b) & 1
        zm >>= 1
        b += 1
    return (1.0 - 2.0 * par).astype(float)


def _full_masks(ps: PauliString, targets: tuple[int, ...], n: int) -> tuple[int, int]:
    xm = zm = 0
    for local, q in enumerate(targets):
        shift_local = ps.num_qubits - 1 - local
        shift_full = n - 1 - q
        xm |= ((ps.x_bits >> shift_local) & 1) << shift_full
        zm |= ((ps.z_bits >> shift_local) & 1) << shift_full
    return xm, zm


def conjugate_pauli_matrix(mat: np.ndarray, ps: PauliString, targets: tuple[int, ...], n: int) -> np.ndarray:
    """E rho E† for a Pauli string embedded on targets, via gathers and signs."""
    xm, zm = _full_masks(ps, targets, n)
    out = mat
    if xm:
        perm = _gather_perm(n, xm)
        out = out[np.ix_(perm, perm)]
    if zm:
        s = _sign_vector(n, zm)
        out = out * s[:, None]
        out = out * s[None, :]
    return out if (xm or zm) else mat.copy()


def apply_pauli_channel_matrix(mat: np.ndarray, channel: PauliChannel, targets: tuple[int, ...], n: int) -> np.ndarray:
    out = np.zeros_like(mat)
    for ps, p in channel.probs.items():
        if p == 0.0:
            continue
        out += p * conjugate_pauli_matrix(mat, ps, targets, n)
    return out


def apply_pauli_channel(state: DensityOperator, channel: PauliChannel, targets) -> DensityOperator:
    """Channel action on a density operator; exact and trace preserving."""
    targets = _check_targets(targets, state.num_qubits)
    if len(targets) != channel.num_qubits:
        raise ValueError("channel qubit count must equal the number of targets")
    out = apply_pauli_channel_matrix(state.matrix, channel, targets, state.num_qubits)
    return DensityOperator(out, labels=state.labels)


# ---------------------------------------------------------------------------
# text serialization: one `<pauli-label> <probability>` pair per line
# ---------------------------------------------------------------------------

def serialize_channel(channel: PauliChannel) -> str:
    lines = [f"{ps.label} {p!r}" for ps, p in sorted(channel.probs.items(), key=lambda kv: kv[0].label)]
    return "\n".join(lines) + "\n"


def parse_channel(text: str) -> PauliChannel:
    probs: dict[PauliString, float] = {}
    n = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValueError(f"malformed channel line: {raw!r}")
        ps = PauliString.from_label(parts[0])
        if n is None:
            n = ps.num_qubits
        elif ps.num_qubits != n:
            raise ValueError("inconsistent Pauli label lengths")
        probs[ps] = probs.get(ps, 0.0) + float(parts[1])
    if n is None:
        raise ValueError("empty channel description")
    return PauliChannel(n, probs)
