//! Tests whether a Hamiltonian's time evolution is covariant under a finite
//! unitary group, by closed-form acceptance probabilities, their commutator
//! series, exact simulation of the test circuits, and variational search.

pub mod error;
pub mod group;
pub mod hamiltonian;
pub mod numerics;
pub mod simulator;
pub mod symcore;
pub mod variational;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use group::{close_generators, close_generators_with_tol, d3_example, z2_z2_example, Gate, GateSpec, GroupRep};
pub use hamiltonian::{
    build_nmr_hamiltonian, trotter_error, trotter_evolution, Hamiltonian, HamiltonianForm,
    HamiltonianSpec, Pauli, PauliTerm, TrotterPlan,
};
pub use numerics::ComplexMatrix;
pub use simulator::{
    derive_seed, sample_shots, simulate_exact, CircuitInstance, Input, Mode, ShotRecord,
};
pub use symcore::{
    acceptance_probability_choi, acceptance_probability_series, acceptance_probability_trace,
    gentle_measurement_check, optimal_acceptance_exact, variational_lower_bounds, BoundSet,
    Probability, ReportOptions, SeriesValue, SymmetryReport, Verdict,
};
pub use variational::{
    ansatz_prepare, optimize_acceptance, optimize_with_restarts, Ansatz, OptimizerConfig,
    RestartSummary, VariationalResult,
};
