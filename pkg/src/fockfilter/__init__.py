"""Fock-state filtration of light pulses by cavity-QED controlled-phase reflections,
with quantum non-Gaussianity certification, bunching, sensing and a TMSV baseline."""

from .bunching import TwoModeState, beamsplitter, bunch_and_project, bunch_chain
from .cavity import (
    CavityParams,
    ReflectionPair,
    controlled_reflection,
    detuning_for_phase,
    phase_for_detuning,
    reflection_coefficients,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    FockFilterError,
    HeraldingError,
    TruncationError,
)
from .filtration import (
    FiltrationRecord,
    RoundSpec,
    Schedule,
    filter_superposition_02,
    filtration_round,
    optimize_schedule,
    run_protocol,
    thermal_filtration_closed_form,
)
from .fock import (
    FieldState,
    FockSpace,
    JointState,
    dephasing_channel,
    displacement_operator,
    loss_channel,
    loss_distribution,
    number_basis_projector,
    squeezing_operator,
    wigner_grid,
)
from .gaussian import (
    GaussianSpec,
    coherent_state,
    displaced_squeezed_thermal,
    dsv_photon_probability,
    superposition_theta,
)
from .qng import (
    CoreState,
    QngReport,
    coherence_depth,
    coherence_measure,
    core_overlap,
    qng_depth,
    qng_report,
    qng_threshold,
    rqng_threshold,
)
from .sensing import (
    SensingTask,
    cfi_photon_counting,
    phase_cfi_binary,
    phase_randomized_output,
    qfi_pure_phase,
)
from .tmsv import (
    TmsvSpec,
    compare_with_filtration,
    tmsv_herald_fidelity,
    tmsv_herald_probability,
)

__version__ = "0.1.0"
