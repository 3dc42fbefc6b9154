//! Trajectory-based simulator for spin squeezing generated by soft-core
//! (Rydberg-dressed) interactions on 1D and 2D lattices.
//!
//! The crate is organized around a pipeline:
//!
//! * [`lattice`] builds site geometries and soft-core coupling matrices,
//! * [`model`] defines the Hamiltonian variants, their classical drift
//!   fields, and the dissipation-channel mapping,
//! * [`engine`] samples discrete Wigner initial conditions and integrates
//!   ensembles of classical trajectories with stochastic dephasing,
//! * [`oracle`] provides exact references (dense Schrödinger and Lindblad
//!   propagation, Dicke-basis one-axis twisting, closed-form Ising
//!   correlators),
//! * [`analysis`] extracts squeezing metrics and scaling summaries,
//! * [`planner`] converts physical Rydberg-dressing parameters into
//!   simulation inputs and checks experimental constraints.
//!
//! All trajectory ensembles are deterministic: results are bit-identical for
//! any worker count (see [`engine::run_ensemble`]).

pub mod analysis;
pub mod engine;
pub mod error;
pub mod lattice;
pub mod model;
pub mod observables;
pub mod oracle;
pub mod planner;

pub use error::{Error, Result};
