//! Data-generating processes for the simulation studies.
//!
//! Every regression scenario draws an observed predictor `x1 ~ N(0, 1)` that
//! is independent of the outcome, so any rejection of `beta1 = 0` is a false
//! positive.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::rng::{Lane, SeedPath};
use crate::samplers::{self, FParams, SamplerError};

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioError {
    TooSmall { n: usize, min: usize },
    InvalidParameter(&'static str),
    EmptyOutcome,
    Sampler(SamplerError),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScenarioError::TooSmall { n, min } => write!(f, "sample size {n} is below the minimum {min}"),
            ScenarioError::InvalidParameter(what) => write!(f, "invalid scenario parameter: {what}"),
            ScenarioError::EmptyOutcome => write!(f, "outcome vector is empty"),
            ScenarioError::Sampler(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ScenarioError {}

impl From<SamplerError> for ScenarioError {
    fn from(e: SamplerError) -> Self {
        ScenarioError::Sampler(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    NullPoisson,
    MisspecifiedF,
    OmittedPredictor,
    CensoredPoisson,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::NullPoisson => "null_poisson",
            ScenarioKind::MisspecifiedF => "misspecified_f",
            ScenarioKind::OmittedPredictor => "omitted_predictor",
            ScenarioKind::CensoredPoisson => "censored_poisson",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            ScenarioKind::NullPoisson,
            ScenarioKind::MisspecifiedF,
            ScenarioKind::OmittedPredictor,
            ScenarioKind::CensoredPoisson,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }

    /// Scenario coordinate of the seed path. Settings of one kind share it,
    /// so e.g. the four omitted-predictor settings see common predictors.
    pub fn stream_id(self) -> i64 {
        match self {
            ScenarioKind::NullPoisson => 0,
            ScenarioKind::MisspecifiedF => 1,
            ScenarioKind::OmittedPredictor => 2,
            ScenarioKind::CensoredPoisson => 3,
        }
    }
}

/// A generating process together with the parameters it uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioSpec {
    /// `y ~ Poisson(exp(beta0))`: the fitted model is correct.
    NullPoisson { beta0: f64 },
    /// `y = round(F(d1, d2))`.
    MisspecifiedF { f_params: FParams },
    /// `y ~ Poisson(exp(beta0 + beta2 x2))` with `x2` hidden from the model.
    OmittedPredictor { beta0: f64, beta2: f64 },
    /// `y ~ Poisson(lambda)` with counts below `censor_threshold` recorded as 0.
    CensoredPoisson { lambda: f64, censor_threshold: u64 },
}

impl ScenarioSpec {
    pub const SCENARIO1: ScenarioSpec = ScenarioSpec::MisspecifiedF { f_params: FParams::EIGHT_EIGHT };

    /// The four `(beta0, beta2)` settings of the omitted-predictor study.
    pub const OMITTED_GRID: [ScenarioSpec; 4] = [
        ScenarioSpec::OmittedPredictor { beta0: 0.3, beta2: 0.7 },
        ScenarioSpec::OmittedPredictor { beta0: 0.3, beta2: 0.8 },
        ScenarioSpec::OmittedPredictor { beta0: 0.5, beta2: 0.7 },
        ScenarioSpec::OmittedPredictor { beta0: 0.5, beta2: 0.8 },
    ];

    pub fn kind(&self) -> ScenarioKind {
        match self {
            ScenarioSpec::NullPoisson { .. } => ScenarioKind::NullPoisson,
            ScenarioSpec::MisspecifiedF { .. } => ScenarioKind::MisspecifiedF,
            ScenarioSpec::OmittedPredictor { .. } => ScenarioKind::OmittedPredictor,
            ScenarioSpec::CensoredPoisson { .. } => ScenarioKind::CensoredPoisson,
        }
    }

    /// `key=value` pairs separated by `;`, e.g. `beta0=0.5;beta2=0.8`.
    pub fn params_label(&self) -> String {
        match *self {
            ScenarioSpec::NullPoisson { beta0 } => alloc::format!("beta0={beta0}"),
            ScenarioSpec::MisspecifiedF { f_params } => alloc::format!("d1={};d2={}", f_params.d1, f_params.d2),
            ScenarioSpec::OmittedPredictor { beta0, beta2 } => alloc::format!("beta0={beta0};beta2={beta2}"),
            ScenarioSpec::CensoredPoisson { lambda, censor_threshold } => {
                alloc::format!("lambda={lambda};threshold={censor_threshold}")
            }
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let finite = |v: f64, what| if v.is_finite() { Ok(()) } else { Err(ScenarioError::InvalidParameter(what)) };
        match *self {
            ScenarioSpec::NullPoisson { beta0 } => finite(beta0, "beta0 must be finite"),
            ScenarioSpec::MisspecifiedF { f_params } => {
                FParams::new(f_params.d1, f_params.d2)?;
                Ok(())
            }
            ScenarioSpec::OmittedPredictor { beta0, beta2 } => {
                finite(beta0, "beta0 must be finite")?;
                finite(beta2, "beta2 must be finite")
            }
            ScenarioSpec::CensoredPoisson { lambda, .. } => {
                if lambda.is_finite() && lambda > 0.0 {
                    Ok(())
                } else {
                    Err(ScenarioError::InvalidParameter("lambda must be finite and positive"))
                }
            }
        }
    }

    /// Generate one regression dataset for this scenario. Censored Poisson
    /// outcomes are paired with an independent `N(0, 1)` predictor.
    pub fn generate(&self, n: usize, seed: SeedPath) -> Result<Dataset, ScenarioError> {
        self.validate()?;
        match *self {
            ScenarioSpec::NullPoisson { .. } => gen_null(self, n, seed),
            ScenarioSpec::MisspecifiedF { f_params } => gen_misspecified(f_params, n, seed),
            ScenarioSpec::OmittedPredictor { .. } => gen_scenario2(self, n, seed),
            ScenarioSpec::CensoredPoisson { lambda, censor_threshold } => {
                check_n(n)?;
                let y = gen_censored_poisson(lambda, censor_threshold, n, seed)?;
                let x1 = samplers::sample_normal(seed, Lane::Predictor, n)?;
                Ok(Dataset { y, x1, x2_hidden: None })
            }
        }
    }
}

impl fmt::Display for ScenarioSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind().name(), self.params_label())
    }
}

/// Outcome counts and the observed predictor. `x2_hidden` records the
/// omitted predictor for auditing; the analysis never reads it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub y: Vec<u64>,
    pub x1: Vec<f64>,
    pub x2_hidden: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(y: Vec<u64>, x1: Vec<f64>) -> Result<Self, ScenarioError> {
        if y.len() != x1.len() {
            return Err(ScenarioError::InvalidParameter("y and x1 must have equal length"));
        }
        Ok(Dataset { y, x1, x2_hidden: None })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

fn check_n(n: usize) -> Result<(), ScenarioError> {
    if n < 2 {
        Err(ScenarioError::TooSmall { n, min: 2 })
    } else {
        Ok(())
    }
}

/// Correctly specified null: `y ~ Poisson(exp(beta0))`, independent of `x1`.
pub fn gen_null(spec: &ScenarioSpec, n: usize, seed: SeedPath) -> Result<Dataset, ScenarioError> {
    let ScenarioSpec::NullPoisson { beta0 } = *spec else {
        return Err(ScenarioError::InvalidParameter("gen_null needs a null_poisson spec"));
    };
    check_n(n)?;
    let x1 = samplers::sample_normal(seed, Lane::Predictor, n)?;
    let y = samplers::sample_poisson_iid(seed, Lane::Outcome, libm::exp(beta0), n)?;
    Ok(Dataset { y, x1, x2_hidden: None })
}

/// Misspecified outcome law: `y = round(F(8, 8))`.
pub fn gen_scenario1(n: usize, seed: SeedPath) -> Result<Dataset, ScenarioError> {
    gen_misspecified(FParams::EIGHT_EIGHT, n, seed)
}

fn gen_misspecified(f_params: FParams, n: usize, seed: SeedPath) -> Result<Dataset, ScenarioError> {
    check_n(n)?;
    let x1 = samplers::sample_normal(seed, Lane::Predictor, n)?;
    let z = samplers::sample_f(seed, Lane::Outcome, f_params, n)?;
    let y = samplers::discretize(&z)?;
    Ok(Dataset { y, x1, x2_hidden: None })
}

/// Omitted predictor: `y ~ Poisson(exp(beta0 + beta2 x2))`, `x2` hidden.
pub fn gen_scenario2(spec: &ScenarioSpec, n: usize, seed: SeedPath) -> Result<Dataset, ScenarioError> {
    let ScenarioSpec::OmittedPredictor { beta0, beta2 } = *spec else {
        return Err(ScenarioError::InvalidParameter("gen_scenario2 needs an omitted_predictor spec"));
    };
    check_n(n)?;
    let x1 = samplers::sample_normal(seed, Lane::Predictor, n)?;
    let x2 = samplers::sample_normal(seed, Lane::HiddenPredictor, n)?;
    let rates: Vec<f64> = x2.iter().map(|&v| libm::exp(beta0 + beta2 * v)).collect();
    let y = samplers::sample_poisson(seed, Lane::Outcome, &rates)?;
    Ok(Dataset { y, x1, x2_hidden: Some(x2) })
}

/// Poisson counts from a faulty instrument: values below `censor_threshold`
/// are recorded as 0.
pub fn gen_censored_poisson(
    lambda: f64,
    censor_threshold: u64,
    n: usize,
    seed: SeedPath,
) -> Result<Vec<u64>, ScenarioError> {
    let mut y = samplers::sample_poisson_iid(seed, Lane::Outcome, lambda, n)?;
    for v in &mut y {
        if *v < censor_threshold {
            *v = 0;
        }
    }
    Ok(y)
}

/// Poisson rate MLE, the sample mean.
pub fn estimate_lambda(y: &[u64]) -> Result<f64, ScenarioError> {
    if y.is_empty() {
        return Err(ScenarioError::EmptyOutcome);
    }
    Ok(y.iter().sum::<u64>() as f64 / y.len() as f64)
}

/// Pearson correlation; NaN when either side is constant.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / libm::sqrt(saa * sbb)
}
