"""Phase estimation with an SU(2) spin-coherent probe in a Mach-Zehnder interferometer.

Exact truncated Fock-space simulation, closed-form quantum Fisher information and
detection sensitivities, and finite-difference oracles that check them.
"""

from .detection import (
    DIVERGENT,
    Observable,
    PhaseOptimum,
    Scheme,
    SensitivityPoint,
    coeffs_bh,
    coeffs_di,
    coeffs_smi,
    optimize_phase,
    qcrb_reference,
    sensitivity_bh,
    sensitivity_curve,
    sensitivity_di,
    sensitivity_oracle,
    sensitivity_smi,
)
from .fock import FockState, ModeMoments, TwoModeState, inner, number_state, tensor, vacuum
from .interferometer import BeamSplitter, PhaseConfig, Scenario, apply_bs, apply_phase, propagate
from .qfi import Qfim, QfiReport, qcrb, qfi_oracle, qfi_report_su2, qfim_general, qfim_oracle, qfim_su2
from .states import InputMoments, Su2CoherentParams, input_moments, input_state, normalization_c, su2_coherent

__version__ = "0.1.0"

__all__ = [
    "DIVERGENT",
    "BeamSplitter",
    "FockState",
    "InputMoments",
    "ModeMoments",
    "Observable",
    "PhaseConfig",
    "PhaseOptimum",
    "Qfim",
    "QfiReport",
    "Scenario",
    "Scheme",
    "SensitivityPoint",
    "Su2CoherentParams",
    "TwoModeState",
    "apply_bs",
    "apply_phase",
    "coeffs_bh",
    "coeffs_di",
    "coeffs_smi",
    "inner",
    "input_moments",
    "input_state",
    "normalization_c",
    "number_state",
    "optimize_phase",
    "propagate",
    "qcrb",
    "qcrb_reference",
    "qfi_oracle",
    "qfi_report_su2",
    "qfim_general",
    "qfim_oracle",
    "qfim_su2",
    "sensitivity_bh",
    "sensitivity_curve",
    "sensitivity_di",
    "sensitivity_oracle",
    "sensitivity_smi",
    "su2_coherent",
    "tensor",
    "vacuum",
]
