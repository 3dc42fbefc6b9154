//! Exact references: dense Schrödinger evolution (N <= 14), dense Lindblad
//! propagation (N <= 8), Dicke-basis one-axis twisting (any N), and
//! closed-form Ising correlators.

mod dense;
mod dicke;
mod ising;
mod ops;
mod propagate;

pub use dense::{traceless, DenseOperatorSet, MAX_DENSE_SPINS};
pub use dicke::{oat_reference, DickeState};
pub use ising::ising_closed_form;
pub use ops::{
    apply_terms, collective_terms, hamiltonian_terms, lindblad_generator_terms, JumpOp, LocalOp,
    Term, TermOps,
};
pub use propagate::{
    coherent_state, density_from_state, evolve_lindblad, evolve_lindblad_series, evolve_state,
    evolve_state_series, moments_from_rho, moments_from_state, LindbladRun, Propagator,
    MAX_RHO_SPINS, MAX_STATE_SPINS,
};
