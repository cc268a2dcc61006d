import numpy as np
import pytest

from helpers import random_density, random_identity_dominant_channel, random_unitary
from vcplab.codes import repetition_code
from vcplab.densesim import DensityOperator, GateOp, choi_state
from vcplab.gadgets import (
    EstimatorDegenerateError,
    GadgetNoise,
    NoisyLayer,
    VirtualState,
    ancilla_condition_matrix,
    channel_layer,
    coherent_detector,
    generalized_gadget,
    incoherent_detector,
    merge_layers,
    post_selected_gadget_choi,
    qec_merge_run,
    split_blocks,
    vcp_layered_run,
    vcp_virtual_apply,
    vsp_estimate,
)
from vcplab.pauli import (
    PauliString,
    apply_pauli_channel_matrix,
    channel_from_labels,
    depolarizing,
    post_selected,
    purify,
    to_kraus,
)

Z = PauliString.from_label("Z").matrix()


def bitflip(p=0.1):
    return channel_from_labels({"I": 1 - p, "X": p})


class TestVirtualState:
    def test_identity_estimator_is_one(self, rng):
        v = VirtualState.from_state(random_density(rng, 1))
        assert v.estimator(np.eye(2)) == pytest.approx(1.0)

    def test_denominator_must_match_trace(self, rng):
        with pytest.raises(ValueError, match="denominator"):
            VirtualState(random_density(rng, 1), 0.5)

    def test_degenerate_denominator_raises(self):
        tiny = DensityOperator(np.diag([1e-14, 0]).astype(complex))
        v = VirtualState(tiny, tiny.trace)
        with pytest.raises(EstimatorDegenerateError):
            v.estimator(np.eye(2))


class TestVcpVirtualApply:
    def test_single_x_example(self):
        v = vcp_virtual_apply(VirtualState.from_state(DensityOperator.zero_state(1)), channel_layer(bitflip()), 2)
        assert v.estimator(Z) == pytest.approx(0.8 / 0.82, abs=1e-12)
        assert v.denominator == pytest.approx(0.82, abs=1e-12)

    def test_third_order_example(self):
        v = vcp_virtual_apply(VirtualState.from_state(DensityOperator.zero_state(1)), channel_layer(bitflip()), 3)
        assert v.estimator(Z) == pytest.approx(0.728 / 0.730, abs=1e-12)

    def test_noiseless_layer_is_exact(self, rng):
        rho = random_density(rng, 2)
        u = random_unitary(rng, 4)
        layer = NoisyLayer(2, [GateOp("unitary", (0, 1), u)], [None])
        v = vcp_virtual_apply(VirtualState.from_state(rho), layer, 2)
        expected = u @ rho.matrix @ u.conj().T
        obs = PauliString.from_label("ZX").matrix()
        assert v.estimator(obs) == pytest.approx(np.trace(obs @ expected).real, abs=1e-12)

    def test_order_below_two_rejected(self):
        with pytest.raises(ValueError, match="order"):
            vcp_virtual_apply(VirtualState.from_state(DensityOperator.zero_state(1)), channel_layer(bitflip()), 1)

    def test_register_mismatch(self, rng):
        with pytest.raises(ValueError, match="register"):
            vcp_virtual_apply(VirtualState.from_state(random_density(rng, 2)), channel_layer(bitflip()), 2)

    def test_theorem_oracle_small(self, rng):
        # spot check; the acceptance suite runs the 100-case battery
        for n, order in ((1, 2), (1, 3), (2, 2), (2, 3)):
            chan = random_identity_dominant_channel(rng, n)
            rho = random_density(rng, n)
            u = random_unitary(rng, 2**n)
            obs = PauliString.from_label("Z" * n).matrix()
            v = vcp_virtual_apply(VirtualState.from_state(rho), channel_layer(chan, u), order)
            rotated = u @ rho.matrix @ u.conj().T
            oracle = np.trace(obs @ apply_pauli_channel_matrix(rotated, purify(chan, order), tuple(range(n)), n)).real
            assert v.estimator(obs) == pytest.approx(oracle, abs=1e-10)

    def test_numerator_hermitian(self, rng):
        chan = random_identity_dominant_channel(rng, 2)
        v = vcp_virtual_apply(VirtualState.from_state(random_density(rng, 2)), channel_layer(chan), 2)
        m = v.numerator.matrix
        assert np.max(np.abs(m - m.conj().T)) < 1e-12


class TestLayeredRun:
    def test_single_block_reduces(self, rng):
        chan = random_identity_dominant_channel(rng, 1)
        layer = channel_layer(chan)
        a = vcp_layered_run([layer], 1, 2)
        b = vcp_virtual_apply(VirtualState.from_state(DensityOperator.zero_state(1)), layer, 2)
        np.testing.assert_allclose(a.numerator.matrix, b.numerator.matrix, atol=1e-14)

    def test_two_blocks_beat_one(self):
        # oracle: purification weights composed analytically per grouping
        circuit = [channel_layer(bitflip()), channel_layer(bitflip())]
        layered = vcp_layered_run(circuit, 2, 2)
        single = vcp_layered_run(circuit, 1, 2)

        # per-block purified channel {I: 81/82, X: 1/82}, applied twice
        pI, pX = 81 / 82, 1 / 82
        layered_x = 2 * pI * pX
        zero = DensityOperator.zero_state(1)
        assert 1 - layered.estimator(np.diag([1.0, 0.0])) == pytest.approx(layered_x, abs=1e-12)

        # composed channel {I: .82, X: .18} purified in one go
        norm = 0.82**2 + 0.18**2
        single_x = 0.18**2 / norm
        assert single_x == pytest.approx(0.0459705, abs=1e-6)
        assert 1 - single.estimator(np.diag([1.0, 0.0])) == pytest.approx(single_x, abs=1e-12)
        assert layered_x < single_x

    def test_denominator_is_product_of_block_denominators(self):
        circuit = [channel_layer(bitflip()), channel_layer(bitflip())]
        layered = vcp_layered_run(circuit, 2, 2)
        # each block contributes its own P_2 = 0.82 to the running trace
        assert layered.denominator == pytest.approx(0.82**2, abs=1e-12)

    def test_noiseless_circuit_any_partition(self, rng):
        layers = []
        for _ in range(4):
            layers.append(NoisyLayer(1, [GateOp.single(0, random_unitary(rng, 2))], [None]))
        expected_ket = np.array([1, 0], dtype=complex)
        for layer in layers:
            expected_ket = layer.gates[0].matrix @ expected_ket
        for split in (1, 2, 4):
            v = vcp_layered_run(layers, split, 2)
            overlap = expected_ket.conj() @ v.normalized().matrix @ expected_ket
            assert overlap.real == pytest.approx(1.0, abs=1e-12)

    def test_ideal_reference_strips_noise(self):
        circuit = [channel_layer(bitflip())]
        v = vcp_layered_run(circuit, 1, 2, GadgetNoise.depolarizing(0.2, 2), ideal_reference=True)
        assert v.estimator(Z) == pytest.approx(1.0, abs=1e-12)

    def test_partition_validation(self):
        circuit = [channel_layer(bitflip())] * 2
        with pytest.raises(ValueError, match="partition"):
            vcp_layered_run(circuit, [1, 2], 2)
        with pytest.raises(ValueError, match="empty"):
            vcp_layered_run([], 1, 2)

    def test_split_blocks(self):
        assert split_blocks(10, 4) == [3, 3, 2, 2]
        with pytest.raises(ValueError):
            split_blocks(3, 5)

    def test_merge_layers_accumulates_depth(self):
        layer = channel_layer(bitflip())
        merged = merge_layers([layer, layer, layer])
        assert merged.depth == 3
        assert len(merged.gates) == 3


class TestVsp:
    def test_pure_state_exact(self, rng):
        ket = rng.normal(size=2) + 1j * rng.normal(size=2)
        rho = DensityOperator.pure(ket)
        est, _ = vsp_estimate([], observable=Z, input_state=rho)
        assert est == pytest.approx(np.trace(Z @ rho.matrix).real, abs=1e-12)

    def test_diagonal_example(self):
        rho = DensityOperator(np.diag([0.95, 0.05]).astype(complex))
        est, _ = vsp_estimate([], observable=Z, input_state=rho)
        assert est == pytest.approx(0.9 / 0.905, abs=1e-12)

    def test_matches_eigendecomposition_oracle(self, rng):
        rho = random_density(rng, 2)
        obs = PauliString.from_label("XZ").matrix()
        est, _ = vsp_estimate([], observable=obs, input_state=rho)
        sq = rho.matrix @ rho.matrix
        assert est == pytest.approx((np.trace(obs @ sq) / np.trace(sq)).real, abs=1e-10)


class TestGeneralizedGadget:
    def test_maximally_mixed_reduction(self, rng):
        chan = random_identity_dominant_channel(rng, 1)
        layer = channel_layer(chan)
        rho = random_density(rng, 1)
        a = vcp_virtual_apply(VirtualState.from_state(rho), layer, 2)
        b = generalized_gadget(VirtualState.from_state(rho), layer, DensityOperator.maximally_mixed(1), np.eye(2), 2)
        np.testing.assert_allclose(a.numerator.matrix, b.numerator.matrix, atol=1e-13)

    def test_code_state_ancilla_purifies(self, rng):
        # sigma = U† sigma_C U with a repetition-code ancilla removes the
        # cross terms exactly like the maximally mixed state does
        noise = channel_from_labels({"III": 0.7, "XII": 0.1, "IXI": 0.1, "IIX": 0.1})
        u = random_unitary(rng, 8)
        layer = channel_layer(noise, u)
        rho = random_density(rng, 3)
        code_ket = np.zeros(8)
        code_ket[0] = 1.0
        sigma = DensityOperator(u.conj().T @ np.outer(code_ket, code_ket) @ u)
        v = generalized_gadget(VirtualState.from_state(rho), layer, sigma, np.eye(8), 2)
        obs = PauliString.from_label("ZZZ").matrix()
        rotated = u @ rho.matrix @ u.conj().T
        oracle = np.trace(obs @ apply_pauli_channel_matrix(rotated, purify(noise, 2), (0, 1, 2), 3)).real
        assert v.estimator(obs) == pytest.approx(oracle, abs=1e-10)

    def test_state_orthogonality_matches_vsp(self):
        # noise takes |0> to orthogonal states, so sigma = rho reproduces VSP
        noise = channel_from_labels({"II": 0.8, "XI": 0.12, "IX": 0.08})
        rho = DensityOperator.zero_state(2)
        layer = channel_layer(noise)
        v = generalized_gadget(VirtualState.from_state(rho), layer, rho, np.eye(4), 2)
        est_vsp, _ = vsp_estimate([layer], observable=PauliString.from_label("ZZ").matrix(), input_state=rho)
        assert v.estimator(PauliString.from_label("ZZ").matrix()) == pytest.approx(est_vsp, abs=1e-10)

    def test_opening_removed_equals_vsp(self, rng):
        noise = random_identity_dominant_channel(rng, 1)
        layer = channel_layer(noise)
        ket = rng.normal(size=2) + 1j * rng.normal(size=2)
        rho = DensityOperator.pure(ket)
        v = generalized_gadget(VirtualState.from_state(rho), layer, rho, np.eye(2), 2, include_opening=False)
        _, vs = vsp_estimate([layer], input_state=rho)
        np.testing.assert_allclose(
            v.numerator.matrix / v.denominator, vs.numerator.matrix / vs.denominator, atol=1e-10
        )


class TestAncillaCondition:
    def test_pauli_with_maximally_mixed(self):
        kraus = to_kraus(depolarizing(1, 0.2))
        report = ancilla_condition_matrix(DensityOperator.maximally_mixed(1), np.eye(2), kraus)
        assert report.purification_residual < 1e-12

    def test_knill_laflamme_identity(self):
        noise = channel_from_labels({"III": 0.7, "XII": 0.1, "IXI": 0.1, "IIX": 0.1})
        ket = np.zeros(8)
        ket[0] = 1.0
        sigma = DensityOperator.pure(ket)
        report = ancilla_condition_matrix(sigma, np.eye(8), to_kraus(noise))
        assert report.purification_residual < 1e-12

    def test_projector_measurement_removes_all(self):
        noise = channel_from_labels({"III": 0.7, "XII": 0.1, "IXI": 0.1, "IIX": 0.1})
        code = repetition_code(3)
        ket = np.zeros(8)
        ket[0] = 1.0
        sigma = DensityOperator.pure(ket)
        report = ancilla_condition_matrix(sigma, code.code_projector, to_kraus(noise))
        assert report.removal_residual < 1e-12
        assert report.purification_residual > 0.5

    def test_state_verification_target(self):
        # S built from the noisy projector reaches p_i delta_ij exactly when
        # the noise maps |psi> to orthogonal states
        noise = channel_from_labels({"II": 0.8, "XI": 0.12, "IX": 0.08})
        kraus = to_kraus(noise)
        ket = np.zeros(4)
        ket[0] = 1.0
        proj = np.outer(ket, ket)
        noisy_proj = sum(p * e @ proj @ e.conj().T for p, e in zip(kraus.weights, kraus.operators))
        report = ancilla_condition_matrix(DensityOperator.pure(ket), noisy_proj, kraus)
        assert report.verification_residual < 1e-12


class TestQecMerge:
    def test_correction_removes_all_noise(self, rng):
        code = repetition_code(3)
        noise = channel_from_labels({"III": 0.7, "XII": 0.1, "IXI": 0.1, "IIX": 0.1})
        rho = random_density(rng, 3)
        out, factor = qec_merge_run(rho, code, noise)
        assert np.max(np.abs(out.matrix - 0.52 * rho.matrix)) < 1e-10
        assert factor == pytest.approx(0.52**-2, abs=1e-9)

    def test_trivial_noise(self, rng):
        code = repetition_code(3)
        out, factor = qec_merge_run(random_density(rng, 3), code, channel_from_labels({"III": 1.0}))
        assert factor == pytest.approx(1.0, abs=1e-9)

    def test_post_selection_variant(self, rng):
        code = repetition_code(3)
        noise = channel_from_labels({"III": 0.7, "XII": 0.1, "IXI": 0.1, "IIX": 0.1})
        rho = random_density(rng, 3)
        out, factor = qec_merge_run(rho, code, noise, post_select_trivial=True)
        assert np.max(np.abs(out.matrix - 0.49 * rho.matrix)) < 1e-10
        assert factor == pytest.approx(0.49**-2, abs=1e-9)

    def test_uncorrectable_noise_rejected(self, rng):
        code = repetition_code(3)
        noise = channel_from_labels({"III": 0.9, "ZII": 0.1})
        with pytest.raises(ValueError, match="non-degenerate"):
            qec_merge_run(random_density(rng, 3), code, noise)


class TestPostSelectedGadget:
    @pytest.mark.parametrize("prob", [0.1, 2 / 3])
    @pytest.mark.parametrize("order", [2, 3])
    def test_matches_corollary(self, prob, order):
        chan = depolarizing(1, prob)
        choi, p_plus = post_selected_gadget_choi(chan, order)
        mixed, p_expected = post_selected(chan, order)
        assert np.max(np.abs(choi.matrix - choi_state(mixed).matrix)) < 1e-10
        assert p_plus == pytest.approx(p_expected, abs=1e-12)


def swap_matrix(half):
    d = 2**half
    m = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            m[(b << half) | a, (a << half) | b] = 1.0
    return m


class TestDetectors:
    def test_symmetric_noise_minus_is_zero(self, rng):
        # I and XX both commute with SWAP
        noise = to_kraus(channel_from_labels({"II": 0.8, "XX": 0.2}))
        minus = coherent_detector(noise, swap_matrix(1), "-")
        assert np.max(np.abs(minus.apply(random_density(rng, 2)))) < 1e-14

    def test_cross_term_probability(self):
        single = channel_from_labels({"I": 0.9, "X": 0.1})
        pair = to_kraus(_tensor_square(single))
        minus = coherent_detector(pair, swap_matrix(1), "-")
        assert minus.branch_probability(DensityOperator.zero_state(2)) == pytest.approx(0.09, abs=1e-12)

    def test_outcomes_recompose_channel(self, rng):
        single = channel_from_labels({"I": 0.85, "Z": 0.15})
        pair = _tensor_square(single)
        kraus = to_kraus(pair)
        g = swap_matrix(1)
        rho = random_density(rng, 2)
        total = coherent_detector(kraus, g, "+").apply(rho) + coherent_detector(kraus, g, "-").apply(rho)
        direct = apply_pauli_channel_matrix(rho.matrix, pair, (0, 1), 2)
        np.testing.assert_allclose(total, direct, atol=1e-13)

    def test_incoherent_even_on_symmetric_subspace(self, rng):
        single = channel_from_labels({"I": 0.9, "X": 0.1})
        kraus = to_kraus(_tensor_square(single))
        g = swap_matrix(1)
        plus_proj = (np.eye(4) + g) / 2
        raw = random_density(rng, 2).matrix
        sym = plus_proj @ raw @ plus_proj
        rho = sym / np.trace(sym).real
        even = incoherent_detector(kraus, g, "even", "+").apply(rho)
        coh = coherent_detector(kraus, g, "+").apply(rho)
        np.testing.assert_allclose(even, plus_proj @ coh @ plus_proj, atol=1e-12)

    def test_odd_identity_channel_zero(self, rng):
        from vcplab.densesim import KrausChannel

        ident = KrausChannel.from_unitary(np.eye(4))
        odd = incoherent_detector(ident, swap_matrix(1), "odd", "+")
        assert np.max(np.abs(odd.apply(random_density(rng, 2)))) < 1e-14

    def test_block_identities_on_random_inputs(self, rng):
        # K_inc^{parity,s}(rho) = (1/4)[K_coh^c(rho) + K_coh^c(G rho G)
        #                              + s (K_coh^c(rho) + K_coh^c(G rho G)) G]
        # with c = + for even parity and c = - for odd parity
        single = channel_from_labels({"I": 0.8, "X": 0.15, "Z": 0.05})
        kraus = to_kraus(_tensor_square(single))
        g = swap_matrix(1)
        rho = random_density(rng, 2).matrix
        grg = g @ rho @ g
        for parity, outcome in (("even", "+"), ("odd", "-")):
            coh = coherent_detector(kraus, g, outcome)
            base = coh.apply(rho) + coh.apply(grg)
            for sign, s in (("+", 1.0), ("-", -1.0)):
                lhs = incoherent_detector(kraus, g, parity, sign).apply(rho)
                np.testing.assert_allclose(lhs, 0.25 * (base + s * base @ g), atol=1e-13)

    def test_branch_traces_sum_to_one(self, rng):
        single = channel_from_labels({"I": 0.7, "Y": 0.3})
        kraus = to_kraus(_tensor_square(single))
        g = swap_matrix(1)
        rho = random_density(rng, 2)
        total = sum(
            incoherent_detector(kraus, g, parity, sign).branch_probability(rho)
            for parity in ("even", "odd")
            for sign in ("+", "-")
        )
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_non_involution_rejected(self):
        noise = to_kraus(channel_from_labels({"I": 0.9, "X": 0.1}))
        with pytest.raises(ValueError, match="identity"):
            coherent_detector(noise, np.array([[1, 0], [0, 1j]]), "+")


def _tensor_square(chan):
    from vcplab.pauli import tensor

    return tensor(chan, chan)


class TestGadgetNoise:
    def test_placement_validation(self):
        with pytest.raises(ValueError, match="placement"):
            GadgetNoise(None, placement="middle")

    def test_depolarizing_factory_arity(self):
        noise = GadgetNoise.depolarizing(0.05, 2)
        assert noise.cswap_noise.num_qubits == 3

    def test_arity_mismatch_rejected(self):
        noise = GadgetNoise.depolarizing(0.05, 3)  # 4-qubit channel
        with pytest.raises(ValueError, match="control plus"):
            vcp_virtual_apply(
                VirtualState.from_state(DensityOperator.zero_state(1)), channel_layer(bitflip()), 2, noise
            )

    def test_opening_noise_is_mitigated(self):
        # noise only after the opening permutations lands inside the purified
        # region; the estimator should stay closer to ideal than with noise
        # on the closing side
        layer = channel_layer(bitflip(0.05))
        opening = GadgetNoise.depolarizing(0.1, 2, placement="opening")
        closing = GadgetNoise.depolarizing(0.1, 2, placement="closing")
        base = VirtualState.from_state(DensityOperator.zero_state(1))
        est_open = vcp_virtual_apply(base, layer, 2, opening).estimator(Z)
        est_close = vcp_virtual_apply(base, layer, 2, closing).estimator(Z)
        ideal = 1.0
        assert abs(est_open - ideal) < abs(est_close - ideal)
