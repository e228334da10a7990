//! Monte Carlo building blocks: sample-size grids, Type I error rates and
//! their binomial bands, per-replicate evaluation, bias records and the
//! small summary statistics used to read the results.
//!
//! Scheduling lives with the caller. Every work unit here is a pure
//! function of its [`SeedPath`], and all aggregation is integer counting.

use alloc::vec::Vec;
use core::fmt;

use crate::glm::{self, IrlsOptions};
use crate::permtest::{self, PermutationOptions, PermutationTally};
use crate::rng::SeedPath;
use crate::scenarios::{self, ScenarioError, ScenarioSpec};

/// Nominal test level.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub enum HarnessError {
    EmptyGrid,
    InvalidSegment { log10_lo: f64, log10_hi: f64, points: u32 },
    EmptyInput,
    InvalidAlpha(f64),
    InvalidPValue(f64),
    InvalidWindow(usize),
    Scenario(ScenarioError),
}

impl fmt::Display for HarnessError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HarnessError::EmptyGrid => write!(f, "grid has no segments"),
            HarnessError::InvalidSegment { log10_lo, log10_hi, points } => write!(
                f,
                "invalid grid segment {log10_lo}:{log10_hi}:{points} (need 0 <= lo < hi and points >= 1)"
            ),
            HarnessError::EmptyInput => write!(f, "no values supplied"),
            HarnessError::InvalidAlpha(a) => write!(f, "alpha must lie in (0, 1), got {a}"),
            HarnessError::InvalidPValue(p) => write!(f, "p-value {p} is outside [0, 1]"),
            HarnessError::InvalidWindow(w) => write!(f, "smoothing window must be odd and >= 1, got {w}"),
            HarnessError::Scenario(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for HarnessError {}

impl From<ScenarioError> for HarnessError {
    fn from(e: ScenarioError) -> Self {
        HarnessError::Scenario(e)
    }
}

/// `points` sizes with `log10(n)` equally spaced over `[log10_lo, log10_hi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSegment {
    pub log10_lo: f64,
    pub log10_hi: f64,
    pub points: u32,
}

impl GridSegment {
    pub const fn new(log10_lo: f64, log10_hi: f64, points: u32) -> Self {
        GridSegment { log10_lo, log10_hi, points }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SizeGrid {
    pub segments: Vec<GridSegment>,
    /// Realized sizes: ascending, unique, positive.
    pub sizes: Vec<usize>,
}

impl SizeGrid {
    /// Censored-Poisson bias study: 10 sizes from 10 to 10^6.
    pub fn bias_paper() -> Self {
        make_grid(&[GridSegment::new(1.0, 6.0, 10)]).expect("static grid")
    }

    /// Regression studies: 30 sizes in [10, 100] and 30 in [100, 10^5].
    pub fn regression_paper() -> Self {
        make_grid(&[GridSegment::new(1.0, 2.0, 30), GridSegment::new(2.0, 5.0, 30)]).expect("static grid")
    }

    /// Reduced regression grid: 8 sizes in [10, 10^4].
    pub fn desk() -> Self {
        make_grid(&[GridSegment::new(1.0, 4.0, 8)]).expect("static grid")
    }
}

pub fn make_grid(segments: &[GridSegment]) -> Result<SizeGrid, HarnessError> {
    if segments.is_empty() {
        return Err(HarnessError::EmptyGrid);
    }
    let mut sizes = Vec::new();
    for s in segments {
        let valid = s.log10_lo.is_finite()
            && s.log10_hi.is_finite()
            && s.log10_lo >= 0.0
            && s.log10_lo < s.log10_hi
            && s.points >= 1;
        if !valid {
            return Err(HarnessError::InvalidSegment {
                log10_lo: s.log10_lo,
                log10_hi: s.log10_hi,
                points: s.points,
            });
        }
        let steps = s.points.saturating_sub(1).max(1);
        for k in 0..s.points {
            let e = s.log10_lo + (s.log10_hi - s.log10_lo) * f64::from(k) / f64::from(steps);
            sizes.push(libm::round(libm::pow(10.0, e)) as usize);
        }
    }
    sizes.sort_unstable();
    sizes.dedup();
    Ok(SizeGrid { segments: segments.to_vec(), sizes })
}

/// Fraction of p-values strictly below `alpha`.
pub fn type1_rate(p_values: &[f64], alpha: f64) -> Result<f64, HarnessError> {
    if p_values.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    check_alpha(alpha)?;
    if let Some(&p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(HarnessError::InvalidPValue(p));
    }
    let rejections = p_values.iter().filter(|&&p| p < alpha).count();
    Ok(rejections as f64 / p_values.len() as f64)
}

fn check_alpha(alpha: f64) -> Result<(), HarnessError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(HarnessError::InvalidAlpha(alpha))
    }
}

/// `alpha +/- 2 sqrt(alpha (1 - alpha) / K)`, clamped to [0, 1]: where the
/// rejection rate of a calibrated test over `K` replicates should fall.
pub fn binomial_band(k: u32, alpha: f64) -> (f64, f64) {
    let k = f64::from(k.max(1));
    let half = 2.0 * libm::sqrt(alpha * (1.0 - alpha) / k);
    ((alpha - half).max(0.0), (alpha + half).min(1.0))
}

/// Centered moving average over points sorted by x; windows are truncated
/// at the ends.
pub fn smooth_rates(points: &[(f64, f64)], window: usize) -> Result<Vec<(f64, f64)>, HarnessError> {
    if window == 0 || window % 2 == 0 {
        return Err(HarnessError::InvalidWindow(window));
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let half = window / 2;
    let smoothed = (0..sorted.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(sorted.len());
            let slice = &sorted[lo..hi];
            (sorted[i].0, slice.iter().map(|p| p.1).sum::<f64>() / slice.len() as f64)
        })
        .collect();
    Ok(smoothed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Wald,
    Permutation,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Wald => "wald",
            Method::Permutation => "permutation",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "wald" => Some(Method::Wald),
            "permutation" | "perm" => Some(Method::Permutation),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rejection-rate estimate for one (scenario, size, method) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TypeIErrorEstimate {
    pub scenario: ScenarioSpec,
    pub n: usize,
    pub method: Method,
    pub k: u32,
    /// Permutations per replicate; 0 for Wald.
    pub n_perm: u32,
    pub rejections: u32,
    pub rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub alpha: f64,
    /// Replicates whose original fit failed (counted as non-rejections).
    pub n_failed: u32,
}

impl TypeIErrorEstimate {
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        scenario: ScenarioSpec,
        n: usize,
        method: Method,
        k: u32,
        n_perm: u32,
        rejections: u32,
        n_failed: u32,
        alpha: f64,
    ) -> Self {
        let (ci_lo, ci_hi) = binomial_band(k, alpha);
        TypeIErrorEstimate {
            scenario,
            n,
            method,
            k,
            n_perm,
            rejections,
            rate: f64::from(rejections) / f64::from(k),
            ci_lo,
            ci_hi,
            alpha,
            n_failed,
        }
    }

    pub fn inside_band(&self) -> bool {
        self.rate >= self.ci_lo && self.rate <= self.ci_hi
    }
}

/// Outcome of one method on one replicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    PValue(f64),
    /// The original fit failed; counted as a non-rejection.
    Failed,
}

impl Verdict {
    pub fn rejects(self, alpha: f64) -> bool {
        matches!(self, Verdict::PValue(p) if p < alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MethodSet {
    pub wald: bool,
    pub permutation: bool,
}

impl MethodSet {
    pub const WALD: MethodSet = MethodSet { wald: true, permutation: false };
    pub const BOTH: MethodSet = MethodSet { wald: true, permutation: true };

    pub fn methods(self) -> impl Iterator<Item = Method> {
        [(self.wald, Method::Wald), (self.permutation, Method::Permutation)]
            .into_iter()
            .filter_map(|(on, m)| on.then_some(m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicateOutcome {
    pub wald: Option<Verdict>,
    pub permutation: Option<Verdict>,
    /// Model fits attempted.
    pub fits: u64,
    pub failed_fits: u64,
}

impl ReplicateOutcome {
    pub fn verdict(&self, method: Method) -> Option<Verdict> {
        match method {
            Method::Wald => self.wald,
            Method::Permutation => self.permutation,
        }
    }
}

/// Seed path of replicate `replicate` at grid position `size_index`.
pub fn replicate_seed(master_seed: u64, spec: &ScenarioSpec, size_index: usize, replicate: u32) -> SeedPath {
    SeedPath::new(master_seed)
        .scenario(spec.kind().stream_id())
        .size(size_index as i64)
        .replicate(i64::from(replicate))
}

/// Generate one dataset and test `beta1 = 0` with the requested methods.
/// Both methods see the same dataset and share the original fit.
pub fn evaluate_replicate(
    spec: &ScenarioSpec,
    n: usize,
    seed: SeedPath,
    methods: MethodSet,
    permutation: &PermutationOptions,
) -> Result<ReplicateOutcome, HarnessError> {
    let data = spec.generate(n, seed)?;
    Ok(evaluate_dataset(&data, seed, methods, permutation))
}

pub fn evaluate_dataset(
    data: &scenarios::Dataset,
    seed: SeedPath,
    methods: MethodSet,
    permutation: &PermutationOptions,
) -> ReplicateOutcome {
    let irls: IrlsOptions = permutation.irls;
    let mut outcome = ReplicateOutcome { wald: None, permutation: None, fits: 1, failed_fits: 0 };
    let fit = glm::fit_poisson_columns(&data.y, Some(&data.x1), &irls);
    let fit = match fit {
        Ok(f) if f.converged => f,
        _ => {
            outcome.failed_fits = 1;
            outcome.wald = methods.wald.then_some(Verdict::Failed);
            outcome.permutation = methods.permutation.then_some(Verdict::Failed);
            return outcome;
        }
    };
    if methods.wald {
        let p = glm::wald_pvalue(&fit, 1).map(|w| w.p_value);
        outcome.wald = Some(p.map_or(Verdict::Failed, Verdict::PValue));
    }
    if methods.permutation {
        let beta1 = fit.coefficients[1];
        let mut tally = PermutationTally::default();
        let mut scratch = Vec::with_capacity(data.len());
        for j in 1..=permutation.n_perm {
            tally.record(beta1, permtest::permuted_slope(data, j, seed, &irls, &mut scratch));
        }
        outcome.fits += u64::from(permutation.n_perm);
        outcome.failed_fits += u64::from(tally.failed);
        outcome.permutation = Some(match tally.finish(beta1, permutation.add_one) {
            Ok(r) => Verdict::PValue(r.p_value),
            Err(_) => Verdict::Failed,
        });
    }
    outcome
}

/// One replicate of the censored-measurement study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasRecord {
    pub n: usize,
    pub replicate: u32,
    /// `lambda_hat - lambda`.
    pub bias: f64,
}

pub fn bias_replicate(
    lambda: f64,
    censor_threshold: u64,
    n: usize,
    seed: SeedPath,
) -> Result<f64, HarnessError> {
    let y = scenarios::gen_censored_poisson(lambda, censor_threshold, n, seed)?;
    Ok(scenarios::estimate_lambda(&y)? - lambda)
}

/// Sample quantile with linear interpolation between order statistics
/// (the common "type 7" definition). `sorted` must be ascending.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sorted_copy(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn median(values: &[f64]) -> f64 {
    quantile_sorted(&sorted_copy(values), 0.5)
}

pub fn iqr(values: &[f64]) -> f64 {
    let s = sorted_copy(values);
    quantile_sorted(&s, 0.75) - quantile_sorted(&s, 0.25)
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = alloc::vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; NaN if either input is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    scenarios::correlation(&ranks(a), &ranks(b))
}
