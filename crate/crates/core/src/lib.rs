//! Poisson regression inference under model misspecification.
//!
//! * [`glm`]: IRLS fit of `y ~ Poisson(exp(b0 + b1 x1))` and Wald tests.
//! * [`permtest`]: permutation p-value for the slope, shuffling `x1`.
//! * [`samplers`] and [`rng`]: reproducible variates keyed by [`SeedPath`].
//! * [`scenarios`]: the null, misspecified-F, omitted-predictor and
//!   censored-Poisson generating processes.
//! * [`harness`]: grids, Type I error rates, bands and per-replicate work.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]

extern crate alloc;

pub mod glm;
pub mod harness;
pub mod permtest;
pub mod rng;
pub mod samplers;
pub mod scenarios;

pub use glm::{fit_poisson, wald_pvalue, DesignMatrix, FitResult, FitStatus, GlmError, WaldTest};
pub use harness::{BiasRecord, GridSegment, Method, MethodSet, SizeGrid, TypeIErrorEstimate};
pub use permtest::{permutation_pvalue, PermutationOptions, PermutationResult};
pub use rng::{Lane, SeedPath};
pub use samplers::FParams;
pub use scenarios::{Dataset, ScenarioKind, ScenarioSpec};
