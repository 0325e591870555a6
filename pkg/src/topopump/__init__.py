"""Topological edge-state pumping in generalized SSH chains.

Simulation toolkit for the fast topological beam splitter and multi-port
router: lattice builders, spectral and topological analysis, driven
Schrodinger dynamics, and disorder/loss robustness ensembles.
"""

from .lattice import (
    ChainSpec,
    CouplingPoint,
    DisorderKind,
    DisorderRealization,
    DisorderSymmetry,
    HamiltonianMatrix,
    LossModel,
    Topology,
    apply_disorder,
    apply_loss,
    asymmetric_loss,
    build_bloch_hamiltonian,
    build_hamiltonian,
    build_interface_hamiltonian,
    build_router_hamiltonian,
    build_ssh_hamiltonian,
    even_chain,
    interface_chain,
    odd_chain,
    router,
    uniform_loss,
)
from .protocol import (
    DriveSchedule,
    cosine_schedule,
    derive_seed,
    exponential_schedule,
    sample_disorder,
    three_step_schedule,
)
from .spectral import (
    EdgeStatePair,
    GapTrack,
    SpectrumSnapshot,
    adiabaticity_metric,
    analytic_edge_states,
    analytic_gap_state,
    d_vector,
    dispersion,
    eigendecompose,
    gap_tracking,
    winding_number,
)
from .dynamics import (
    EvolutionResult,
    convergence_check,
    evolve,
    evolve_batch,
    initial_state,
    phase_difference,
    target_state,
)
from .experiments import (
    CubicFit,
    EnsembleStats,
    FidelityCurve,
    PhaseDiagram,
    ScalingPoint,
    alpha_phase_diagram,
    cosine_time_budget,
    cubic_fit,
    disorder_ensemble,
    exponential_time_budget,
    fidelity_vs_size_with_loss,
    fidelity_vs_time,
    fitted_alpha_for_size,
    loss_sweep,
    optimal_alpha,
    protocol_factory,
    stabilization_time,
    stabilization_vs_branches,
    stabilization_vs_size,
)

__version__ = "0.1.0"
