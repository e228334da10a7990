//! Parallel scheduling of the Monte Carlo experiments.
//!
//! Work units are keyed by their seed path and results are reduced with
//! integer counts in a fixed order, so output does not depend on the number
//! of worker threads.

use std::time::Instant;

use log::warn;
use permpois_core::harness::{self, BiasRecord, Method, MethodSet, ReplicateOutcome, SizeGrid, TypeIErrorEstimate};
use permpois_core::permtest::{self, PermutationOptions, PermutationResult, PermutationTally};
use permpois_core::rng::SeedPath;
use permpois_core::scenarios::{Dataset, ScenarioSpec};
use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Type1Settings {
    pub k: u32,
    pub permutation: PermutationOptions,
    pub methods: MethodSet,
    pub alpha: f64,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Type1Run {
    pub estimates: Vec<TypeIErrorEstimate>,
    pub total_fits: u64,
    pub failed_fits: u64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiasRun {
    pub records: Vec<BiasRecord>,
    pub wall_seconds: f64,
}

pub struct Runner {
    pool: ThreadPool,
}

impl Runner {
    /// `threads = None` uses one worker per available core.
    pub fn new(threads: Option<usize>) -> Result<Self> {
        let mut builder = ThreadPoolBuilder::new();
        if let Some(t) = threads {
            builder = builder.num_threads(t.max(1));
        }
        Ok(Runner { pool: builder.build()? })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    /// `K` replicates per grid size, each tested with every enabled method.
    pub fn run_type1_experiment(
        &self,
        spec: &ScenarioSpec,
        grid: &SizeGrid,
        settings: &Type1Settings,
    ) -> Result<Type1Run> {
        spec.validate()?;
        if settings.k == 0 {
            return Err(crate::Error::usage("K must be at least 1"));
        }
        let start = Instant::now();
        let outcomes = self.replicate_outcomes(spec, grid, settings)?;

        let mut estimates = Vec::new();
        let mut total_fits = 0;
        let mut failed_fits = 0;
        for (s, &n) in grid.sizes.iter().enumerate() {
            let cell = &outcomes[s * settings.k as usize..(s + 1) * settings.k as usize];
            total_fits += cell.iter().map(|o| o.fits).sum::<u64>();
            failed_fits += cell.iter().map(|o| o.failed_fits).sum::<u64>();
            for method in settings.methods.methods() {
                let mut rejections = 0u32;
                let mut failed = 0u32;
                for outcome in cell {
                    match outcome.verdict(method) {
                        Some(v @ harness::Verdict::PValue(_)) => rejections += u32::from(v.rejects(settings.alpha)),
                        _ => failed += 1,
                    }
                }
                if failed > 0 {
                    warn!("{spec} n={n} {method}: {failed} of {} replicates failed to fit", settings.k);
                }
                let n_perm = if method == Method::Permutation { settings.permutation.n_perm } else { 0 };
                estimates.push(TypeIErrorEstimate::from_counts(
                    *spec,
                    n,
                    method,
                    settings.k,
                    n_perm,
                    rejections,
                    failed,
                    settings.alpha,
                ));
            }
        }
        Ok(Type1Run { estimates, total_fits, failed_fits, wall_seconds: start.elapsed().as_secs_f64() })
    }

    /// Raw per-replicate outcomes, ordered by size index then replicate.
    pub fn replicate_outcomes(
        &self,
        spec: &ScenarioSpec,
        grid: &SizeGrid,
        settings: &Type1Settings,
    ) -> Result<Vec<ReplicateOutcome>> {
        let units: Vec<(usize, u32)> = (0..grid.sizes.len())
            .flat_map(|s| (0..settings.k).map(move |r| (s, r)))
            .collect();
        let outcomes = self.pool.install(|| {
            units
                .par_iter()
                .map(|&(s, r)| {
                    let seed = harness::replicate_seed(settings.master_seed, spec, s, r);
                    harness::evaluate_replicate(spec, grid.sizes[s], seed, settings.methods, &settings.permutation)
                })
                .collect::<std::result::Result<Vec<_>, _>>()
        })?;
        Ok(outcomes)
    }

    /// Censored-measurement study: `replicates` rate estimates per size.
    pub fn run_bias_experiment(
        &self,
        lambda: f64,
        censor_threshold: u64,
        grid: &SizeGrid,
        replicates: u32,
        master_seed: u64,
    ) -> Result<BiasRun> {
        let spec = ScenarioSpec::CensoredPoisson { lambda, censor_threshold };
        spec.validate()?;
        if replicates == 0 {
            return Err(crate::Error::usage("replicates must be at least 1"));
        }
        let start = Instant::now();
        let units: Vec<(usize, u32)> = (0..grid.sizes.len())
            .flat_map(|s| (0..replicates).map(move |r| (s, r)))
            .collect();
        let records = self.pool.install(|| {
            units
                .par_iter()
                .map(|&(s, r)| {
                    let n = grid.sizes[s];
                    let seed = harness::replicate_seed(master_seed, &spec, s, r);
                    let bias = harness::bias_replicate(lambda, censor_threshold, n, seed)?;
                    Ok(BiasRecord { n, replicate: r, bias })
                })
                .collect::<Result<Vec<_>>>()
        })?;
        Ok(BiasRun { records, wall_seconds: start.elapsed().as_secs_f64() })
    }

    /// Permutation p-value with the permutations spread over the pool.
    pub fn permutation_pvalue(
        &self,
        data: &Dataset,
        options: &PermutationOptions,
        seed: SeedPath,
    ) -> Result<PermutationResult> {
        if options.n_perm == 0 {
            return Err(permtest::PermutationError::NoPermutations.into());
        }
        let beta1 = permtest::original_slope(data, &options.irls)?;
        let tally = self.pool.install(|| {
            (1..=options.n_perm)
                .into_par_iter()
                .fold(
                    || (PermutationTally::default(), Vec::with_capacity(data.len())),
                    |(mut tally, mut scratch), j| {
                        tally.record(beta1, permtest::permuted_slope(data, j, seed, &options.irls, &mut scratch));
                        (tally, scratch)
                    },
                )
                .map(|(t, _)| t)
                .reduce(PermutationTally::default, PermutationTally::merge)
        });
        Ok(tally.finish(beta1, options.add_one)?)
    }
}
