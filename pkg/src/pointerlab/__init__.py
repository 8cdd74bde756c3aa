"""pointerlab: pointer states, kitten decoherence and classical islands in small bosonic and two-body models."""

from .amplitudes import MarkovModel, RabiModel, markov_amplitudes, rabi_amplitudes, rabi_eigencheck
from .exchange import AmplitudePair, evolve_fock, evolve_system, exchange_matrix, factorization_check
from .fock import (
    DensityMatrix,
    FockVector,
    InvalidStateError,
    SchmidtDecomposition,
    TruncationError,
    TwoModeState,
    auto_truncation,
    coherent_state,
    entropy_bits,
    fidelity,
    fock_state,
    kitten_state,
    partial_trace,
    purity,
    schmidt,
    trace_distance,
    von_neumann_entropy,
)
from .kitten import (
    coherence_metric,
    kitten_reduced_closed_form,
    kitten_reduced_numeric,
    kitten_timeline,
    record_state_overlap,
)
from .lindblad import (
    StepSizeError,
    TrajectoryConfig,
    damped_coherent_analytic,
    integrate_master,
    run_trajectories,
)
from .twobody import (
    EdgeProximityError,
    ScatteringScenario,
    entanglement_entropy,
    load_scenario,
    mean_field_comparison,
    run_scenario,
    shipped_scenario,
    test_particle_run,
)

__version__ = "0.1.0"
