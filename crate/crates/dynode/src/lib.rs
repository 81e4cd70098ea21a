//! Exact dynamics of an avalanche qubit tree — a toy model of a
//! photodetector's dynode chain.
//!
//! The model is a layered binary tree of two-level systems. Each non-leaf
//! qubit carries a three-qubit "avalanche" kernel that converts one excitation
//! into two in the layer below (and back), the way a dynode multiplies
//! photoelectrons. A single trigger excitation on the root is conserved in a
//! layer-weighted sense, which confines the dynamics to a reduced sector whose
//! dimension grows as `D(L) = D(L-1)² + 1` — 677 states at five layers instead
//! of 2³¹.
//!
//! The crate builds that sector explicitly, evolves states exactly under
//! ideal, statically disordered, and time-dependent (piecewise-constant)
//! disordered Hamiltonians, and computes the diagnostics used to study how
//! the trigger's quantum information spreads:
//!
//! - per-layer mean occupations (ballistic spreading, quasi-periodic returns),
//! - out-of-time-order correlators between Pauli-z operators,
//! - Holevo information extractable from single-qubit marginals,
//! - eigenvalue spacing-ratio statistics against the Poisson reference.
//!
//! Everything is deterministic: disorder realizations are indexed streams of
//! a counter-based generator, so ensembles reproduce bit-identically under
//! any parallel schedule.
//!
//! # Layout
//!
//! | module | contents |
//! |---|---|
//! | [`network`] | tree topology and avalanche kernels |
//! | [`basis`] | conserved-sector enumeration and index maps |
//! | [`disorder`] | detuning schedules from per-vertex phase mismatches |
//! | [`hamiltonian`] | reduced-sector Hermitian matrix for one interval |
//! | [`propagator`] | piecewise-exact evolution, plus a full-space oracle |
//! | [`observables`] | occupation, OTOC, entropy, Holevo, arrival times |
//! | [`spectrum`] | level-spacing ratio statistics |
//! | [`ensemble`] | seeded multi-realization runs and averaging |
//! | [`report`] | CSV / SVG emission and run manifests |
//! | [`cli`] | command-line front end |
//!
//! # Units
//!
//! The uniform kernel coupling `g` fixes the scales: energies are quoted in
//! units of `g` and times in units of `1/g`. The command line never accepts
//! absolute frequencies.

pub mod basis;
pub mod cli;
pub mod disorder;
pub mod ensemble;
pub mod hamiltonian;
pub mod network;
pub mod observables;
pub mod propagator;
pub mod report;
pub mod spectrum;

mod book;

pub use basis::{brute_force_enumerate, conserved_charge, dimension, OccupationPattern, ReducedBasis};
pub use disorder::{DisorderMode, DisorderSchedule};
pub use ensemble::{EnsembleConfig, EnsembleOutcome, ObservableKind, ProbeSet};
pub use hamiltonian::HamiltonianMatrix;
pub use network::TreeNetwork;
pub use observables::{ObservableSeries, SeriesKind};
pub use propagator::{Propagator, StateVector};
pub use spectrum::SpectrumResult;

/// Errors shared across the crate.
///
/// The CLI maps variants to exit codes: [`Error::InvalidArgument`] exits with
/// 2, everything else with 3.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied value violates an operation's preconditions.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// A request exceeds a built-in size guard (e.g. tree depth, dense matrix
    /// dimension).
    #[error("resource guard: {0}")]
    ResourceGuard(String),
    /// A numerical postcondition failed (lost norm, non-PSD marginal, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
