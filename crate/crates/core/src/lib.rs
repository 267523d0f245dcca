//! Simulator for planar coalescing stochastic particle systems with
//! logarithmic interaction kernels.
//!
//! Particles carry nonuniform masses, attract each other through a mean
//! field solved on a grid, and undergo many-body inelastic collisions.
//! Collisions are predicted by the index of the squared Bessel process
//! driving a cluster's second moment, which avoids pairwise distance
//! checks and extremely refined timestepping.
//!
//! The crate is organized bottom-up:
//!
//! - [`model`]: domain types, conserved quantities, and the maps from
//!   (multispecies) Keller-Segel parameters to particle-system parameters
//! - [`bessel`]: index algebra, second-moment SDE coefficients,
//!   hitting-time sampling, and subsystem drift corrections
//! - [`meanfield`]: mass deposition, finite-difference Poisson solve,
//!   and gradient sampling with a monopole far field
//! - [`dynamics`]: adaptive Euler-Maruyama propagation with exact
//!   bookkeeping of each particle's Wiener increment
//! - [`clustering`]: quadtree detection of isolated collidable aggregates
//! - [`coalescence`]: within-step second-moment simulation and merges
//! - [`diagnostics`]: moment tracking, rate predictors, and CSV output
//! - [`config`], [`sampling`], [`presets`], [`run`]: experiment setup and
//!   the top-level macro-step loop

pub mod bessel;
pub mod clustering;
pub mod coalescence;
pub mod config;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod kernel;
pub mod meanfield;
pub mod model;
pub mod presets;
pub mod rng;
pub mod run;
pub mod sampling;
pub mod vec2;

pub use error::{SimError, SimResult};
pub use vec2::Vec2;
