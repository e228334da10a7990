//! Permutation p-value for the Poisson regression slope.
//!
//! The observed slope is compared against slopes refitted after shuffling
//! the predictor. Only `x1` is permuted; the outcome passed to every refit
//! is the caller's original slice.
//!
//! Permutation `j` (1-based) draws its shuffle from the stream
//! `seed.permutation(j)`, so permutations can be evaluated in any order or
//! in parallel and tallied with [`PermutationTally`].

use alloc::vec::Vec;
use core::fmt;

use crate::glm::{self, FitStatus, GlmError, IrlsOptions};
use crate::rng::{Lane, SeedPath, StreamRng};
use crate::scenarios::Dataset;

/// Fraction of failed permuted fits above which a result is unreliable.
pub const FAILED_FIT_LIMIT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum PermutationError {
    NoPermutations,
    OriginalFitFailed(FitStatus),
    AllPermutationsFailed { n_perm: u32 },
    Glm(GlmError),
}

impl fmt::Display for PermutationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PermutationError::NoPermutations => write!(f, "number of permutations must be at least 1"),
            PermutationError::OriginalFitFailed(status) => {
                write!(f, "fit on the original data failed ({status})")
            }
            PermutationError::AllPermutationsFailed { n_perm } => {
                write!(f, "all {n_perm} permuted fits failed")
            }
            PermutationError::Glm(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for PermutationError {}

impl From<GlmError> for PermutationError {
    fn from(e: GlmError) -> Self {
        PermutationError::Glm(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationOptions {
    pub n_perm: u32,
    /// Report `(count + 1) / (valid + 1)` instead of `count / valid`.
    pub add_one: bool,
    pub irls: IrlsOptions,
}

impl Default for PermutationOptions {
    fn default() -> Self {
        PermutationOptions { n_perm: 1000, add_one: false, irls: IrlsOptions::default() }
    }
}

impl PermutationOptions {
    pub fn with_permutations(n_perm: u32) -> Self {
        PermutationOptions { n_perm, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationResult {
    pub beta1_orig: f64,
    /// Permutations with `|beta1_perm| >= |beta1_orig|`.
    pub count: u32,
    /// Requested permutations.
    pub n_perm: u32,
    pub n_failed_fits: u32,
    pub p_value: f64,
    /// More than [`FAILED_FIT_LIMIT`] of the permuted fits failed.
    pub unreliable: bool,
}

/// Order-independent accumulator of permuted slopes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PermutationTally {
    pub count: u32,
    pub failed: u32,
    pub seen: u32,
}

impl PermutationTally {
    pub fn record(&mut self, beta1_orig: f64, permuted: Option<f64>) {
        self.seen += 1;
        match permuted {
            Some(b) if libm::fabs(b) >= libm::fabs(beta1_orig) => self.count += 1,
            Some(_) => {}
            None => self.failed += 1,
        }
    }

    pub fn merge(mut self, other: PermutationTally) -> Self {
        self.count += other.count;
        self.failed += other.failed;
        self.seen += other.seen;
        self
    }

    pub fn finish(self, beta1_orig: f64, add_one: bool) -> Result<PermutationResult, PermutationError> {
        if self.seen == 0 {
            return Err(PermutationError::NoPermutations);
        }
        let valid = self.seen - self.failed;
        if valid == 0 {
            return Err(PermutationError::AllPermutationsFailed { n_perm: self.seen });
        }
        let p_value = if add_one {
            f64::from(self.count + 1) / f64::from(valid + 1)
        } else {
            f64::from(self.count) / f64::from(valid)
        };
        Ok(PermutationResult {
            beta1_orig,
            count: self.count,
            n_perm: self.seen,
            n_failed_fits: self.failed,
            p_value,
            unreliable: f64::from(self.failed) > FAILED_FIT_LIMIT * f64::from(self.seen),
        })
    }
}

/// In-place Fisher–Yates shuffle.
pub fn shuffle_in_place<T>(x: &mut [T], rng: &mut StreamRng) {
    for i in (1..x.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        x.swap(i, j);
    }
}

/// A uniformly random permutation of `x`.
pub fn shuffle(x: &[f64], seed: SeedPath) -> Vec<f64> {
    let mut out = x.to_vec();
    shuffle_in_place(&mut out, &mut seed.rng(Lane::Shuffle));
    out
}

/// Slope of the fit to the original data, or the reason it failed.
pub fn original_slope(data: &Dataset, irls: &IrlsOptions) -> Result<f64, PermutationError> {
    let fit = glm::fit_poisson_columns(&data.y, Some(&data.x1), irls)?;
    fit.slope().ok_or(PermutationError::OriginalFitFailed(fit.status))
}

/// Slope refitted on permutation `j`; `None` when that fit fails.
/// `scratch` is overwritten with the permuted predictor.
pub fn permuted_slope(
    data: &Dataset,
    j: u32,
    seed: SeedPath,
    irls: &IrlsOptions,
    scratch: &mut Vec<f64>,
) -> Option<f64> {
    scratch.clear();
    scratch.extend_from_slice(&data.x1);
    shuffle_in_place(scratch, &mut seed.permutation(i64::from(j)).rng(Lane::Shuffle));
    glm::fit_poisson_columns(&data.y, Some(scratch), irls).ok()?.slope()
}

/// Run all `options.n_perm` permutations sequentially.
pub fn permutation_pvalue(
    data: &Dataset,
    options: &PermutationOptions,
    seed: SeedPath,
) -> Result<PermutationResult, PermutationError> {
    let irls = options.irls;
    permutation_pvalue_by(data, options, seed, |y, x| {
        glm::fit_poisson_columns(y, Some(x), &irls).ok()?.slope()
    })
}

/// Same procedure with a caller-supplied slope estimator `fit(y, x1)`.
pub fn permutation_pvalue_by<F>(
    data: &Dataset,
    options: &PermutationOptions,
    seed: SeedPath,
    mut fit: F,
) -> Result<PermutationResult, PermutationError>
where
    F: FnMut(&[u64], &[f64]) -> Option<f64>,
{
    if options.n_perm == 0 {
        return Err(PermutationError::NoPermutations);
    }
    let beta1_orig = match fit(&data.y, &data.x1) {
        Some(b) => b,
        None => {
            let status = glm::fit_poisson_columns(&data.y, Some(&data.x1), &options.irls)?.status;
            return Err(PermutationError::OriginalFitFailed(status));
        }
    };
    let mut tally = PermutationTally::default();
    let mut x = Vec::with_capacity(data.x1.len());
    for j in 1..=options.n_perm {
        x.clear();
        x.extend_from_slice(&data.x1);
        shuffle_in_place(&mut x, &mut seed.permutation(i64::from(j)).rng(Lane::Shuffle));
        tally.record(beta1_orig, fit(&data.y, &x));
    }
    tally.finish(beta1_orig, options.add_one)
}
