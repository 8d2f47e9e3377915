"""Chiral excitation circulation in flux-threaded qubit loops, and GHZ-state
generation built on it: state/gate primitives, Hamiltonian builders, unitary
and open-system propagators, the schedule protocol, a schedule-file format,
and analysis table generators.
"""

from .analysis import (
    FidelityReport,
    PopulationTrace,
    RwaPoint,
    fidelity_vs_n,
    population_trace,
    rwa_sweep,
)
from .dynamics import (
    IntegratorSettings,
    NoiseRates,
    evolve_lab,
    evolve_lindblad,
    evolve_static,
    evolve_trajectories,
    interaction_frame,
)
from .errors import AccuracyError, ParseError, ScheduleError
from .hamiltonian import (
    CouplingSpec,
    HamiltonianMatrix,
    LoopWindow,
    SystemConfig,
    coupling_amplitude,
    couplings_for_window,
    effective_hamiltonian,
    excitation_block,
    lab_hamiltonian,
    loop_flux,
)
from .loop3 import (
    CirculationTiming,
    LoopEigensystem,
    circulation_direction,
    circulation_period,
    closed_form_populations,
    g0_for_swap_time,
    loop_eigensystem,
)
from .protocol import (
    Checkpoint,
    CheckpointReport,
    CheckpointTranscript,
    CnotEvent,
    Schedule,
    build_ghz_schedule,
    execute_ideal,
    execute_noisy,
    execute_trajectories,
    verify_checkpoints,
)
from .schedfile import ScheduleDocument, document_from_schedule, parse, serialize
from .states import (
    DensityMatrix,
    PulseEvent,
    StateVector,
    apply_cnot,
    apply_pulse,
    fidelity,
    ghz_target,
    index_to_label,
    label_to_index,
    make_basis_state,
    populations,
)

__version__ = "0.1.0"
