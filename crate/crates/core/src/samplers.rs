//! Random variates for the simulation studies: standard normal, Poisson,
//! gamma / chi-square, Fisher F, and rounding of continuous draws to counts.
//!
//! All vector samplers are pure functions of `(SeedPath, Lane, arguments)`.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use crate::rng::{Lane, SeedPath, StreamRng};

#[derive(Debug, Clone, PartialEq)]
pub enum SamplerError {
    EmptyRequest,
    InvalidRate { index: usize, rate: f64 },
    InvalidDegreesOfFreedom { d1: u32, d2: u32 },
    InvalidValue { index: usize, value: f64 },
}

impl fmt::Display for SamplerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerError::EmptyRequest => write!(f, "sample size must be at least 1"),
            SamplerError::InvalidRate { index, rate } => {
                write!(f, "Poisson rate at index {index} must be finite and positive, got {rate}")
            }
            SamplerError::InvalidDegreesOfFreedom { d1, d2 } => {
                write!(f, "F degrees of freedom must be >= 1, got ({d1}, {d2})")
            }
            SamplerError::InvalidValue { index, value } => {
                write!(f, "value at index {index} must be finite and >= 0, got {value}")
            }
        }
    }
}

impl core::error::Error for SamplerError {}

/// Degrees of freedom of an F distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FParams {
    pub d1: u32,
    pub d2: u32,
}

impl FParams {
    /// F(8, 8), the outcome law of the misspecified-distribution scenario.
    pub const EIGHT_EIGHT: FParams = FParams { d1: 8, d2: 8 };

    pub fn new(d1: u32, d2: u32) -> Result<Self, SamplerError> {
        if d1 == 0 || d2 == 0 {
            return Err(SamplerError::InvalidDegreesOfFreedom { d1, d2 });
        }
        Ok(FParams { d1, d2 })
    }
}

/// One standard normal draw (Box–Muller, cosine branch).
#[inline]
pub fn standard_normal(rng: &mut StreamRng) -> f64 {
    let u1 = rng.uniform();
    let u2 = rng.uniform();
    libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * PI * u2)
}

/// Gamma(shape, 1) by Marsaglia and Tsang's squeeze method; shapes below one
/// are boosted with `U^(1/shape)`.
pub fn gamma(rng: &mut StreamRng, shape: f64) -> f64 {
    debug_assert!(shape > 0.0);
    if shape < 1.0 {
        let boost = libm::pow(rng.uniform(), 1.0 / shape);
        return gamma(rng, shape + 1.0) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / libm::sqrt(9.0 * d);
    loop {
        let x = standard_normal(rng);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = rng.uniform();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 {
            return d * v;
        }
        if libm::log(u) < 0.5 * x2 + d * (1.0 - v + libm::log(v)) {
            return d * v;
        }
    }
}

#[inline]
pub fn chi_square(rng: &mut StreamRng, dof: f64) -> f64 {
    2.0 * gamma(rng, 0.5 * dof)
}

#[inline]
pub fn fisher_f(rng: &mut StreamRng, params: FParams) -> f64 {
    let d1 = f64::from(params.d1);
    let d2 = f64::from(params.d2);
    let num = chi_square(rng, d1) / d1;
    let den = chi_square(rng, d2) / d2;
    num / den
}

const INVERSION_LIMIT: f64 = 10.0;

/// One Poisson draw. Sequential inversion below rate 10, Hörmann's PTRS
/// transformed rejection above.
pub fn poisson(rng: &mut StreamRng, rate: f64) -> u64 {
    debug_assert!(rate > 0.0 && rate.is_finite());
    if rate < INVERSION_LIMIT {
        poisson_inversion(rng, rate)
    } else {
        poisson_ptrs(rng, rate)
    }
}

fn poisson_inversion(rng: &mut StreamRng, rate: f64) -> u64 {
    let p0 = libm::exp(-rate);
    'restart: loop {
        let u = rng.uniform();
        let mut k = 0u64;
        let mut p = p0;
        let mut cdf = p0;
        while u > cdf {
            k += 1;
            p *= rate / k as f64;
            cdf += p;
            // Rounding can leave the accumulated cdf just below u.
            if k > 200 {
                continue 'restart;
            }
        }
        return k;
    }
}

fn poisson_ptrs(rng: &mut StreamRng, rate: f64) -> u64 {
    let slam = libm::sqrt(rate);
    let loglam = libm::log(rate);
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.uniform() - 0.5;
        let v = rng.uniform();
        let us = 0.5 - libm::fabs(u);
        let k = libm::floor((2.0 * a / us + b) * u + rate + 0.43);
        if us >= 0.07 && v <= vr {
            return k as u64;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = libm::log(v) + libm::log(inv_alpha) - libm::log(a / (us * us) + b);
        let rhs = -rate + k * loglam - libm::lgamma(k + 1.0);
        if lhs <= rhs {
            return k as u64;
        }
    }
}

/// `n` i.i.d. standard normal variates.
pub fn sample_normal(seed: SeedPath, lane: Lane, n: usize) -> Result<Vec<f64>, SamplerError> {
    if n == 0 {
        return Err(SamplerError::EmptyRequest);
    }
    let mut rng = seed.rng(lane);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1 = rng.uniform();
        let u2 = rng.uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let (s, c) = libm::sincos(2.0 * PI * u2);
        out.push(r * c);
        if out.len() < n {
            out.push(r * s);
        }
    }
    Ok(out)
}

/// Elementwise Poisson draws, one per rate.
pub fn sample_poisson(seed: SeedPath, lane: Lane, rates: &[f64]) -> Result<Vec<u64>, SamplerError> {
    if rates.is_empty() {
        return Err(SamplerError::EmptyRequest);
    }
    if let Some((index, &rate)) = rates
        .iter()
        .enumerate()
        .find(|(_, r)| !(r.is_finite() && **r > 0.0))
    {
        return Err(SamplerError::InvalidRate { index, rate });
    }
    let mut rng = seed.rng(lane);
    Ok(rates.iter().map(|&r| poisson(&mut rng, r)).collect())
}

/// `n` i.i.d. Poisson draws with a common rate.
pub fn sample_poisson_iid(
    seed: SeedPath,
    lane: Lane,
    rate: f64,
    n: usize,
) -> Result<Vec<u64>, SamplerError> {
    if n == 0 {
        return Err(SamplerError::EmptyRequest);
    }
    if !(rate.is_finite() && rate > 0.0) {
        return Err(SamplerError::InvalidRate { index: 0, rate });
    }
    let mut rng = seed.rng(lane);
    Ok((0..n).map(|_| poisson(&mut rng, rate)).collect())
}

/// `n` i.i.d. F(d1, d2) variates as a ratio of scaled chi-squares.
pub fn sample_f(seed: SeedPath, lane: Lane, params: FParams, n: usize) -> Result<Vec<f64>, SamplerError> {
    if n == 0 {
        return Err(SamplerError::EmptyRequest);
    }
    FParams::new(params.d1, params.d2)?;
    let mut rng = seed.rng(lane);
    Ok((0..n).map(|_| fisher_f(&mut rng, params)).collect())
}

/// Round to the nearest integer, halves away from zero.
pub fn discretize(z: &[f64]) -> Result<Vec<u64>, SamplerError> {
    z.iter()
        .enumerate()
        .map(|(index, &value)| {
            if value.is_finite() && value >= 0.0 {
                Ok(libm::round(value) as u64)
            } else {
                Err(SamplerError::InvalidValue { index, value })
            }
        })
        .collect()
}
