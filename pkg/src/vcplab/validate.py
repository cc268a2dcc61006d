"""Fast self-check suite behind `vcplab validate`.

Each check exercises one oracle identity end to end and reports pass/fail;
the full battery runs in a few seconds.
"""

from __future__ import annotations

import numpy as np

from . import budget as bd
from .codes import repetition_code
from .densesim import DensityOperator, choi_state, twirl
from .gadgets import (
    VirtualState,
    channel_layer,
    coherent_detector,
    post_selected_gadget_choi,
    qec_merge_run,
    vcp_virtual_apply,
)
from .pauli import (
    PauliChannel,
    all_pauli_strings,
    apply_pauli_channel_matrix,
    channel_from_labels,
    depolarizing,
    post_selected,
    purify,
    tensor,
    to_kraus,
)


def _random_density(rng, n):
    d = 2**n
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = a @ a.conj().T
    return DensityOperator(m / np.trace(m).real)


def _random_unitary(rng, d):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def _random_identity_dominant(rng, n, support=4):
    paulis = list(all_pauli_strings(n))
    picks = [0] + sorted(rng.choice(len(paulis) - 1, size=min(support, len(paulis) - 1), replace=False) + 1)
    probs = rng.random(len(picks))
    probs[0] = probs.max() * 1.5
    probs /= probs.sum()
    return PauliChannel(n, {paulis[int(i)]: float(p) for i, p in zip(picks, probs)})


def check_theorem1(seed: int = 11) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (1, 2):
        for order in (2, 3):
            chan = _random_identity_dominant(rng, n)
            rho = _random_density(rng, n)
            u = _random_unitary(rng, 2**n)
            obs = list(all_pauli_strings(n))[int(rng.integers(1, 4**n))].matrix()
            v = vcp_virtual_apply(VirtualState.from_state(rho), channel_layer(chan, u), order)
            urho = u @ rho.matrix @ u.conj().T
            oracle = np.trace(obs @ apply_pauli_channel_matrix(urho, purify(chan, order), tuple(range(n)), n)).real
            worst = max(worst, abs(v.estimator(obs) - oracle))
    return worst <= 1e-10, f"max |gadget - purified oracle| = {worst:.2e}"


def check_corollary1(seed: int = 12) -> tuple[bool, str]:
    worst = 0.0
    for prob in (0.1, 2.0 / 3.0):
        for order in (2, 3):
            chan = depolarizing(1, prob)
            choi, p_plus = post_selected_gadget_choi(chan, order)
            mixed, p_expected = post_selected(chan, order)
            worst = max(worst, float(np.max(np.abs(choi.matrix - choi_state(mixed).matrix))))
            worst = max(worst, abs(p_plus - p_expected))
    return worst <= 1e-10, f"max Choi/probability deviation = {worst:.2e}"


def check_qec_merge(seed: int = 13) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    code = repetition_code(3)
    chan = channel_from_labels({"III": 0.7, "XII": 0.1, "IXI": 0.1, "IIX": 0.1})
    rho = _random_density(rng, 3)
    out, factor = qec_merge_run(rho, code, chan)
    diff = float(np.max(np.abs(out.matrix - 0.52 * rho.matrix)))
    ok = diff <= 1e-10 and abs(factor - 0.52**-2) <= 1e-9
    return ok, f"output diff {diff:.2e}, sampling factor {factor:.6f}"


def check_budget_root() -> tuple[bool, str]:
    root = bd.cir_threshold_root(2)
    return abs(root - 1.2564) <= 1e-3, f"(1+2x)e^-x = 1 at x = {root:.5f}"


def check_detector(seed: int = 14) -> tuple[bool, str]:
    single = channel_from_labels({"I": 0.9, "X": 0.1})
    kraus = to_kraus(tensor(single, single))
    swap = np.zeros((4, 4))
    swap[0, 0] = swap[3, 3] = swap[1, 2] = swap[2, 1] = 1.0
    p_minus = coherent_detector(kraus, swap, "-").branch_probability(DensityOperator.zero_state(2))
    return abs(p_minus - 0.09) <= 1e-12, f"P(-) = {p_minus:.12f}"


def check_twirl_roundtrip(seed: int = 15) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    chan = _random_identity_dominant(rng, 1, support=3)
    back = twirl(to_kraus(chan))
    worst = max(
        abs(back.probs.get(ps, 0.0) - p) for ps, p in chan.probs.items()
    )
    return worst <= 1e-12, f"max probability drift = {worst:.2e}"


def check_suppression_ratio() -> tuple[bool, str]:
    ratios = []
    for n in (1, 2):
        chan = depolarizing(n, 0.1)
        chan_factor = chan.error_weight / purify(chan, 2).error_weight
        dominant = (1 - 0.1) + 0.1 / 2**n
        rest = 0.1 / 2**n
        state_p2 = dominant**2 + (2**n - 1) * rest**2
        state_factor = ((2**n - 1) * rest) / ((2**n - 1) * rest**2 / state_p2)
        ratios.append(chan_factor / state_factor / 2**n)
    ok = all(abs(r - 1.0) <= 0.1 for r in ratios)
    return ok, "ratio/target = " + ", ".join(f"{r:.4f}" for r in ratios)


CHECKS = (
    ("theorem-1 purified-channel equivalence", check_theorem1),
    ("corollary-1 post-selected channel", check_corollary1),
    ("qec-merged gadget", check_qec_merge),
    ("budget threshold root", check_budget_root),
    ("coherent detector cross term", check_detector),
    ("twirl round trip", check_twirl_roundtrip),
    ("channel-vs-state suppression ratio", check_suppression_ratio),
)


def run_all(verbose: bool = True) -> bool:
    all_ok = True
    for name, fn in CHECKS:
        ok, detail = fn()
        all_ok = all_ok and ok
        if verbose:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return all_ok
