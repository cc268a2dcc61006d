import numpy as np
import pytest

from helpers import random_density, random_identity_dominant_channel
from vcplab.densesim import DensityOperator, KrausChannel
from vcplab.gadgets import VirtualState, channel_layer, vcp_virtual_apply
from vcplab.metrics import (
    ENTANGLEMENT_FIDELITY_THRESHOLD,
    coherent_information,
    entangled_fidelity,
    virtual_infidelity,
)
from vcplab.pauli import channel_from_labels, depolarizing, post_selected, purify, to_kraus


class TestEntangledFidelity:
    def test_identity_channel(self):
        assert entangled_fidelity(channel_from_labels({"II": 1.0})) == pytest.approx(1.0)

    def test_depolarizing_closed_form(self):
        for prob in (0.1, 0.4, 0.9):
            assert entangled_fidelity(depolarizing(1, prob)) == pytest.approx(1 - 0.75 * prob)

    def test_post_selected_two_thirds(self):
        mixed, _ = post_selected(depolarizing(1, 2 / 3), 2)
        assert entangled_fidelity(mixed) == pytest.approx(0.5625, abs=1e-12)

    def test_pauli_fast_path_matches_dense(self, rng):
        chan = random_identity_dominant_channel(rng, 1)
        assert entangled_fidelity(chan) == pytest.approx(entangled_fidelity(to_kraus(chan)), abs=1e-12)

    def test_purification_improves_fidelity(self, rng):
        for _ in range(5):
            chan = random_identity_dominant_channel(rng, 1, support=3)
            direct = entangled_fidelity(chan)
            pure = entangled_fidelity(purify(chan, 2))
            if chan.error_weight > 1e-9:
                assert pure > direct

    def test_post_selected_lies_between(self, rng):
        chan = depolarizing(1, 0.3)
        mixed, _ = post_selected(chan, 2)
        direct = entangled_fidelity(chan)
        pure = entangled_fidelity(purify(chan, 2))
        assert direct < entangled_fidelity(mixed) < pure


class TestCoherentInformation:
    def test_identity_gives_qubit_count(self):
        assert coherent_information(channel_from_labels({"I": 1.0})) == pytest.approx(1.0)
        assert coherent_information(channel_from_labels({"II": 1.0})) == pytest.approx(2.0)

    def test_fully_depolarizing_single_qubit(self):
        assert coherent_information(depolarizing(1, 1.0)) == pytest.approx(-1.0, abs=1e-10)

    def test_kraus_input_accepted(self):
        chan = KrausChannel.from_unitary(np.eye(2))
        assert coherent_information(chan) == pytest.approx(1.0)

    @pytest.mark.parametrize("num_qubits", [1, 2])
    def test_post_selection_never_hurts(self, num_qubits):
        for prob in np.linspace(0.0, 1.0, 11):
            chan = depolarizing(num_qubits, float(prob))
            mixed, _ = post_selected(chan, 2)
            assert coherent_information(mixed) >= coherent_information(chan) - 1e-10


class TestActivationWindows:
    @pytest.mark.parametrize("num_qubits", [1, 2])
    def test_window_exists(self, num_qubits):
        threshold = ENTANGLEMENT_FIDELITY_THRESHOLD[num_qubits]
        probs = np.linspace(0.0, 1.0, 51)
        window = []
        for prob in probs:
            chan = depolarizing(num_qubits, float(prob))
            mixed, _ = post_selected(chan, 2)
            if entangled_fidelity(chan) < threshold <= entangled_fidelity(mixed):
                window.append(prob)
        assert window


class TestVirtualInfidelity:
    def test_noiseless_is_zero(self, rng):
        ket = rng.normal(size=4) + 1j * rng.normal(size=4)
        v = VirtualState.from_state(DensityOperator.pure(ket))
        assert virtual_infidelity(v, ket) == pytest.approx(0.0, abs=1e-12)

    def test_purified_bitflip(self):
        chan = channel_from_labels({"I": 0.9, "X": 0.1})
        v = vcp_virtual_apply(VirtualState.from_state(DensityOperator.zero_state(1)), channel_layer(chan), 2)
        assert virtual_infidelity(v, np.array([1.0, 0.0])) == pytest.approx(1 / 82, abs=1e-12)

    def test_unmitigated_bitflip(self):
        rho = DensityOperator(np.diag([0.9, 0.1]).astype(complex))
        v = VirtualState.from_state(rho)
        assert virtual_infidelity(v, np.array([1.0, 0.0])) == pytest.approx(0.1)

    def test_accepts_density_operator_reference(self, rng):
        rho = random_density(rng, 1)
        v = VirtualState.from_state(rho)
        ref = DensityOperator.zero_state(1)
        assert virtual_infidelity(v, ref) == pytest.approx(1 - rho.matrix[0, 0].real)

    def test_no_clamping(self):
        # signed numerator can push the raw value outside [0, 1]
        numerator = DensityOperator(np.diag([-0.5, 1.0]).astype(complex))
        v = VirtualState(numerator, 0.5)
        value = virtual_infidelity(v, np.array([1.0, 0.0]))
        assert value == pytest.approx(2.0)
