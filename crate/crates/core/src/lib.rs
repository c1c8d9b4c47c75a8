//! Worst-case row-erasure analysis for Gaussian sketching matrices.
//!
//! A sketch `A ∈ R^{m×n}` with i.i.d. `N(0,1)` entries keeps `‖Ax‖²/m` close
//! to `‖x‖²`. This crate measures how much of that survives when an
//! adversary deletes up to `⌊βm⌋` rows after seeing `A`: exact extremes over
//! all erasures, closed-form bounds, Monte Carlo estimates, and audits of
//! pairwise embeddings and restricted-isometry bands.

pub mod bounds;
pub mod constants;
pub mod erasure;
pub mod error;
pub mod io;
pub mod jl;
pub mod lambert;
pub mod montecarlo;
pub mod rip;
pub mod rng;

pub use bounds::{BoundEntry, BoundReport, GaussianConstants, Provenance};
pub use erasure::{
    DistortionBand, ErasureSpec, ErasureWitness, Normalization, RatioExtremes, SortedSample,
};
pub use error::{Error, Result};
pub use jl::{Dataset, DistortionReport, ProjectionSpec};
pub use montecarlo::{EstimateResult, QuantileResult, TrialPlan};
pub use rip::{RipLevels, RipOutcome, SphereNet, StrongRipReport, SupportSet};
