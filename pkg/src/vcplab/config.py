"""Numerical tolerance constants used across the package.

All fixed tolerances live in one record so that simulation, algebra and
test code agree on what "numerically zero" means at each contract.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    hermiticity: float = 1e-12       # max element deviation of A - A†
    unitarity: float = 1e-12         # max element deviation of U†U - I
    state_trace: float = 1e-12       # |Tr(rho) - 1| for physical states
    trace_preservation: float = 1e-10
    psd: float = 1e-10               # eigenvalues of physical states >= -psd
    imag_expectation: float = 1e-10  # imaginary residue of Tr(O rho)
    prob_sum: float = 1e-12          # Pauli-channel probabilities sum to 1
    entropy_clamp: float = 1e-14     # eigenvalues below this are treated as 0
    denominator_underflow: float = 1e-13  # virtual-state denominator cutoff
    projector: float = 1e-12         # code projector idempotence / identity checks
    kl_residual: float = 1e-10       # Knill-Laflamme residual threshold


TOL = Tolerances()
