"""vcplab: a numerical laboratory for virtual channel purification."""

from .budget import (
    BudgetParams,
    cir_threshold_root,
    compare_vsp,
    d_star_small_noise,
    optimal_layers,
    sampling_overhead_bound,
    variance_and_cost,
    vcp_budget,
)
from .circuits import build_random_circuit
from .codes import StabilizerCode, kl_check, load_generators, measure_syndrome_and_correct, repetition_code
from .densesim import (
    DensityOperator,
    GateOp,
    KrausChannel,
    apply_channel,
    apply_unitary,
    choi_state,
    expectation,
    partial_trace,
    twirl,
    von_neumann_entropy,
)
from .experiments import ExperimentConfig, run_experiment
from .gadgets import (
    EstimatorDegenerateError,
    GadgetNoise,
    NoisyLayer,
    VirtualState,
    ancilla_condition_matrix,
    channel_layer,
    coherent_detector,
    generalized_gadget,
    incoherent_detector,
    post_selected_gadget_choi,
    qec_merge_run,
    vcp_layered_run,
    vcp_virtual_apply,
    vsp_estimate,
)
from .metrics import coherent_information, entangled_fidelity, virtual_infidelity
from .pauli import (
    PauliChannel,
    PauliString,
    apply_pauli_channel,
    channel_from_labels,
    compose,
    depolarizing,
    p_m,
    parse_channel,
    post_selected,
    purify,
    serialize_channel,
    tensor,
    to_kraus,
)
from .sampling import gadget_joint_distribution, mc_sample

__version__ = "0.1.0"
