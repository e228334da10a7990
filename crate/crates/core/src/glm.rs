//! Poisson regression with log link, fitted by iteratively reweighted least
//! squares, and Wald tests on the fitted coefficients.
//!
//! Designs are limited to an intercept plus at most one predictor, so the
//! weighted normal equations are solved in closed form as a 2x2 Cholesky.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum GlmError {
    EmptyDesign,
    LengthMismatch { rows: usize, outcomes: usize },
    TooFewRows { rows: usize, columns: usize },
    NonFiniteValue { row: usize },
    NotConverged(FitStatus),
    NoSuchCoefficient { index: usize, columns: usize },
}

impl fmt::Display for GlmError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GlmError::EmptyDesign => write!(f, "design matrix has no rows"),
            GlmError::LengthMismatch { rows, outcomes } => {
                write!(f, "design has {rows} rows but outcome has {outcomes} values")
            }
            GlmError::TooFewRows { rows, columns } => {
                write!(f, "need at least {columns} rows for {columns} columns, got {rows}")
            }
            GlmError::NonFiniteValue { row } => write!(f, "non-finite predictor value at row {row}"),
            GlmError::NotConverged(status) => write!(f, "fit did not converge ({status})"),
            GlmError::NoSuchCoefficient { index, columns } => {
                write!(f, "coefficient {index} out of range for {columns} columns")
            }
        }
    }
}

impl core::error::Error for GlmError {}

/// Intercept column of ones, optionally followed by one predictor column.
///
/// The intercept is implicit; only the predictor is stored.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    rows: usize,
    predictor: Option<Vec<f64>>,
}

impl DesignMatrix {
    pub fn intercept_only(rows: usize) -> Result<Self, GlmError> {
        if rows == 0 {
            return Err(GlmError::EmptyDesign);
        }
        Ok(DesignMatrix { rows, predictor: None })
    }

    pub fn with_predictor(x: Vec<f64>) -> Result<Self, GlmError> {
        check_predictor(&x)?;
        Ok(DesignMatrix { rows: x.len(), predictor: Some(x) })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> usize {
        1 + usize::from(self.predictor.is_some())
    }

    pub fn predictor(&self) -> Option<&[f64]> {
        self.predictor.as_deref()
    }

    pub fn get(&self, row: usize, column: usize) -> f64 {
        match (column, &self.predictor) {
            (0, _) => 1.0,
            (1, Some(x)) => x[row],
            _ => panic!("column {column} out of range"),
        }
    }
}

fn check_predictor(x: &[f64]) -> Result<(), GlmError> {
    if x.len() < 2 {
        return if x.is_empty() {
            Err(GlmError::EmptyDesign)
        } else {
            Err(GlmError::TooFewRows { rows: x.len(), columns: 2 })
        };
    }
    match x.iter().position(|v| !v.is_finite()) {
        Some(row) => Err(GlmError::NonFiniteValue { row }),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FitStatus {
    Ok,
    MaxIter,
    DegenerateAllZero,
    Singular,
}

impl fmt::Display for FitStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FitStatus::Ok => "ok",
            FitStatus::MaxIter => "max_iter",
            FitStatus::DegenerateAllZero => "degenerate_all_zero",
            FitStatus::Singular => "singular",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    /// `[intercept]` or `[intercept, slope]`; NaN when the fit failed.
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub deviance: f64,
    pub iterations: u32,
    pub converged: bool,
    pub status: FitStatus,
}

impl FitResult {
    fn failed(columns: usize, status: FitStatus, iterations: u32) -> Self {
        FitResult {
            coefficients: vec![f64::NAN; columns],
            standard_errors: vec![f64::NAN; columns],
            deviance: f64::NAN,
            iterations,
            converged: false,
            status,
        }
    }

    /// Slope estimate, when the design had a predictor and the fit converged.
    pub fn slope(&self) -> Option<f64> {
        if self.converged {
            self.coefficients.get(1).copied()
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsOptions {
    /// Convergence when `|dev - dev_prev| / (|dev| + 0.1)` falls below this.
    pub tolerance: f64,
    pub max_iter: u32,
    /// Relative pivot size below which the normal equations are singular.
    pub pivot_threshold: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions { tolerance: 1e-8, max_iter: 25, pivot_threshold: 1e-10 }
    }
}

/// Fit `y ~ Poisson(exp(X beta))` with default options.
pub fn fit_poisson(design: &DesignMatrix, y: &[u64]) -> Result<FitResult, GlmError> {
    fit_poisson_with(design, y, &IrlsOptions::default())
}

pub fn fit_poisson_with(
    design: &DesignMatrix,
    y: &[u64],
    options: &IrlsOptions,
) -> Result<FitResult, GlmError> {
    if design.rows != y.len() {
        return Err(GlmError::LengthMismatch { rows: design.rows, outcomes: y.len() });
    }
    Ok(irls(y, design.predictor(), options))
}

/// Fit on borrowed columns. `x = None` is the intercept-only model.
pub fn fit_poisson_columns(y: &[u64], x: Option<&[f64]>, options: &IrlsOptions) -> Result<FitResult, GlmError> {
    match x {
        Some(x) => {
            check_predictor(x)?;
            if x.len() != y.len() {
                return Err(GlmError::LengthMismatch { rows: x.len(), outcomes: y.len() });
            }
        }
        None if y.is_empty() => return Err(GlmError::EmptyDesign),
        None => {}
    }
    Ok(irls(y, x, options))
}

/// Sufficient statistics of one pass at the current coefficients.
struct Pass {
    // X'WX entries (W = diag(mu))
    i00: f64,
    i01: f64,
    i11: f64,
    // X'(y - mu)
    s0: f64,
    s1: f64,
    deviance: f64,
}

fn pass(y: &[u64], x: Option<&[f64]>, b0: f64, b1: f64, ylogy: f64) -> Pass {
    let mut p = Pass { i00: 0.0, i01: 0.0, i11: 0.0, s0: 0.0, s1: 0.0, deviance: 0.0 };
    // deviance = 2 * sum(y log y - y eta - (y - mu)), with the y log y sum precomputed
    let mut y_eta = 0.0;
    let mut sum_y = 0.0;
    match x {
        Some(x) => {
            for (&yi, &xi) in y.iter().zip(x) {
                let yi = yi as f64;
                let eta = b0 + b1 * xi;
                let mu = libm::exp(eta);
                let r = yi - mu;
                p.i00 += mu;
                p.i01 += mu * xi;
                p.i11 += mu * xi * xi;
                p.s0 += r;
                p.s1 += r * xi;
                y_eta += yi * eta;
                sum_y += yi;
            }
        }
        None => {
            let mu = libm::exp(b0);
            for &yi in y {
                let yi = yi as f64;
                p.i00 += mu;
                p.s0 += yi - mu;
                y_eta += yi * b0;
                sum_y += yi;
            }
        }
    }
    p.deviance = (2.0 * (ylogy - y_eta - (sum_y - p.i00))).max(0.0);
    p
}

enum Solve {
    Step { d0: f64, d1: f64, inv00: f64, inv11: f64 },
    Singular,
}

fn solve(p: &Pass, has_slope: bool, pivot_threshold: f64) -> Solve {
    if !(p.i00 > 0.0) || !p.i00.is_finite() {
        return Solve::Singular;
    }
    if !has_slope {
        return Solve::Step { d0: p.s0 / p.i00, d1: 0.0, inv00: 1.0 / p.i00, inv11: f64::NAN };
    }
    // Cholesky-style elimination; the second pivot is the weighted
    // residual variance of the predictor.
    let pivot = p.i11 - p.i01 * p.i01 / p.i00;
    if !(pivot > pivot_threshold * p.i11) || !pivot.is_finite() {
        return Solve::Singular;
    }
    let d1 = (p.s1 - p.i01 / p.i00 * p.s0) / pivot;
    let d0 = (p.s0 - p.i01 * d1) / p.i00;
    let inv11 = 1.0 / pivot;
    let inv00 = 1.0 / p.i00 + (p.i01 / p.i00) * (p.i01 / p.i00) * inv11;
    Solve::Step { d0, d1, inv00, inv11 }
}

fn irls(y: &[u64], x: Option<&[f64]>, options: &IrlsOptions) -> FitResult {
    let columns = 1 + usize::from(x.is_some());
    let n = y.len() as f64;
    let total: u64 = y.iter().sum();
    if total == 0 {
        return FitResult::failed(columns, FitStatus::DegenerateAllZero, 0);
    }
    let mean = total as f64 / n;
    let ylogy: f64 = y
        .iter()
        .filter(|&&v| v > 0)
        .map(|&v| {
            let v = v as f64;
            v * libm::log(v)
        })
        .sum();

    // A constant outcome solves the score equations exactly at zero slope.
    if y.iter().all(|&v| v == y[0]) {
        let b0 = libm::log(mean);
        let p = pass(y, x, b0, 0.0, ylogy);
        return match solve(&p, x.is_some(), options.pivot_threshold) {
            Solve::Singular => FitResult::failed(columns, FitStatus::Singular, 1),
            Solve::Step { inv00, inv11, .. } => finish(columns, b0, 0.0, inv00, inv11, p.deviance, 1, FitStatus::Ok),
        };
    }

    let mut b0 = libm::log(mean + 0.1);
    let mut b1 = 0.0;
    let mut previous = f64::INFINITY;
    for iteration in 1..=options.max_iter {
        let p = pass(y, x, b0, b1, ylogy);
        let step = solve(&p, x.is_some(), options.pivot_threshold);
        let Solve::Step { d0, d1, inv00, inv11 } = step else {
            return FitResult::failed(columns, FitStatus::Singular, iteration);
        };
        if (previous - p.deviance).abs() / (p.deviance.abs() + 0.1) < options.tolerance {
            return finish(columns, b0, b1, inv00, inv11, p.deviance, iteration, FitStatus::Ok);
        }
        if iteration == options.max_iter {
            let mut fit = finish(columns, b0, b1, inv00, inv11, p.deviance, iteration, FitStatus::MaxIter);
            fit.converged = false;
            return fit;
        }
        // WLS on the working response eta + (y - mu)/mu; for the canonical
        // link this is beta + (X'WX)^-1 X'(y - mu).
        b0 += d0;
        b1 += d1;
        previous = p.deviance;
        if !(b0.is_finite() && b1.is_finite()) {
            return FitResult::failed(columns, FitStatus::MaxIter, iteration);
        }
    }
    FitResult::failed(columns, FitStatus::MaxIter, options.max_iter)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    columns: usize,
    b0: f64,
    b1: f64,
    inv00: f64,
    inv11: f64,
    deviance: f64,
    iterations: u32,
    status: FitStatus,
) -> FitResult {
    let (coefficients, standard_errors) = if columns == 2 {
        (vec![b0, b1], vec![libm::sqrt(inv00), libm::sqrt(inv11)])
    } else {
        (vec![b0], vec![libm::sqrt(inv00)])
    };
    FitResult { coefficients, standard_errors, deviance, iterations, converged: true, status }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaldTest {
    pub z: f64,
    pub p_value: f64,
}

/// Two-sided standard normal tail, `2 (1 - Phi(|z|))`.
pub fn two_sided_normal_p(z: f64) -> f64 {
    libm::erfc(libm::fabs(z) / core::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// Wald z-test of one coefficient of a converged fit.
pub fn wald_pvalue(fit: &FitResult, coefficient_index: usize) -> Result<WaldTest, GlmError> {
    if !fit.converged {
        return Err(GlmError::NotConverged(fit.status));
    }
    let columns = fit.coefficients.len();
    if coefficient_index >= columns {
        return Err(GlmError::NoSuchCoefficient { index: coefficient_index, columns });
    }
    let z = fit.coefficients[coefficient_index] / fit.standard_errors[coefficient_index];
    Ok(WaldTest { z, p_value: two_sided_normal_p(z) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn fit_x(y: &[u64], x: &[f64]) -> FitResult {
        fit_poisson(&DesignMatrix::with_predictor(x.to_vec()).unwrap(), y).unwrap()
    }

    #[test]
    fn constant_outcome_has_zero_slope() {
        let fit = fit_x(&[2, 2, 2, 2], &[-1.0, 0.0, 1.0, 2.0]);
        assert_eq!(fit.status, FitStatus::Ok);
        assert!((fit.coefficients[0] - 2f64.ln()).abs() < 1e-12);
        assert_eq!(fit.coefficients[1], 0.0);
        assert!(fit.standard_errors.iter().all(|s| s.is_finite() && *s > 0.0));
    }

    #[test]
    fn intercept_only_is_log_mean() {
        let design = DesignMatrix::intercept_only(3).unwrap();
        let fit = fit_poisson(&design, &[1, 2, 3]).unwrap();
        assert!(fit.converged);
        assert!((fit.coefficients[0] - 2f64.ln()).abs() < 1e-8);
        // se = 1 / sqrt(n * mean)
        assert!((fit.standard_errors[0] - 1.0 / 6f64.sqrt()).abs() < 1e-8);
    }

    #[test]
    fn all_zero_is_degenerate() {
        let fit = fit_x(&[0, 0, 0], &[1.0, 2.0, 3.0]);
        assert_eq!(fit.status, FitStatus::DegenerateAllZero);
        assert!(!fit.converged);
        assert!(wald_pvalue(&fit, 1).is_err());
    }

    #[test]
    fn constant_predictor_is_singular() {
        let fit = fit_x(&[0, 1, 3, 2], &[4.0; 4]);
        assert_eq!(fit.status, FitStatus::Singular);
        let fit = fit_x(&[0, 1, 3, 2], &[0.0; 4]);
        assert_eq!(fit.status, FitStatus::Singular);
    }

    #[test]
    fn separated_data_hits_iteration_cap() {
        // Only the largest x has a positive count: the slope MLE is infinite.
        let fit = fit_x(&[0, 0, 0, 5], &[0.0, 1.0, 2.0, 3.0]);
        assert!(!fit.converged);
        assert_ne!(fit.status, FitStatus::Ok);
        assert!(fit.iterations <= 25);
    }

    #[test]
    fn input_validation() {
        let design = DesignMatrix::with_predictor(vec![0.0, 1.0, 2.0]).unwrap();
        assert!(matches!(fit_poisson(&design, &[1, 2]), Err(GlmError::LengthMismatch { .. })));
        assert!(matches!(
            DesignMatrix::with_predictor(vec![0.0, f64::NAN]),
            Err(GlmError::NonFiniteValue { row: 1 })
        ));
        assert!(DesignMatrix::with_predictor(vec![]).is_err());
        assert!(DesignMatrix::with_predictor(vec![1.0]).is_err());
        assert!(DesignMatrix::intercept_only(0).is_err());
    }

    #[test]
    fn design_accessors() {
        let d = DesignMatrix::with_predictor(vec![3.0, 4.0]).unwrap();
        assert_eq!(d.columns(), 2);
        assert_eq!(d.get(1, 0), 1.0);
        assert_eq!(d.get(1, 1), 4.0);
    }

    #[test]
    fn wald_at_zero_is_one() {
        assert_eq!(two_sided_normal_p(0.0), 1.0);
    }

    #[test]
    fn wald_symmetric() {
        assert_eq!(two_sided_normal_p(1.959964), two_sided_normal_p(-1.959964));
    }

    #[test]
    fn wald_index_checks() {
        let fit = fit_x(&[0, 1, 1, 2, 3], &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!(wald_pvalue(&fit, 1).is_ok());
        assert!(matches!(wald_pvalue(&fit, 2), Err(GlmError::NoSuchCoefficient { .. })));
    }
}
