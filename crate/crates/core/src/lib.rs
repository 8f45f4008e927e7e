//! Simulator and bounds library for distributed lossy averaging of
//! white-Gaussian-noise sources over networks.
//!
//! Every node of a connected graph observes an independent unit-power WGN
//! source and wants the average of all sources to within a mean squared
//! error `D`. Nodes communicate pairwise in rounds; each exchange sends a
//! rate-constrained description with normalized local distortion `d`.
//!
//! The crate provides:
//!
//! - [`topology`]: graph construction, validation, edge-list serialization;
//! - [`spectral`]: the expected averaging matrix, its spectrum (cyclic
//!   Jacobi), and projected-subgradient minimization of the second
//!   eigenvalue over edge-selection matrices;
//! - [`ensemble`]: exact second-moment propagation of all node estimates
//!   under the weighted-sum update, plus a Monte Carlo sample-path oracle;
//! - [`protocols`]: edge-selection processes, rate accounting (plain and
//!   Wyner-Ziv), gossip / fixed-sequence runners, and the centralized star
//!   protocol;
//! - [`bounds`]: closed-form rate and round-count bounds with their
//!   validity domains.
//!
//! Monte Carlo trials and run sweeps are data-parallel. With the default
//! `parallel` feature they run on rayon; see [`parallel::Parallelism`] for
//! the sequential fallback.

pub mod bounds;
pub mod ensemble;
pub mod error;
pub mod matrix;
pub mod parallel;
pub mod protocols;
pub mod rng;
pub mod spectral;
pub mod topology;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;
