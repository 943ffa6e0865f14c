//! Tail processes of regularly varying stationary time series.
//!
//! The crate simulates spectral tail processes `Θ`, the tail process
//! `Y = RΘ`, the cluster sequence `Q`, max-stable processes built from `Q`,
//! and long stationary series, then checks the identities that tie them
//! together by seeded, lane-parallel Monte Carlo.

pub mod clusterlab;
pub mod error;
pub mod estimate;
pub mod functional;
pub mod identities;
pub mod maxstable;
pub mod models;
pub mod seqspace;
pub mod stats;
pub mod suites;
pub mod tailkernel;

pub use error::{Error, Result};
pub use estimate::{Estimate, Moments, Sampling};
pub use functional::FunctionalSpec;
pub use models::{SpectralLaw, SpectralModel};
pub use seqspace::{ArgmaxResult, FiniteSeq};
