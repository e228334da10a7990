use std::io::Write;

use permpois_core::glm::{self, FitStatus, IrlsOptions};
use permpois_core::harness::{self, iqr, median, SizeGrid};
use permpois_core::permtest::PermutationOptions;
use permpois_core::rng::SeedPath;
use permpois_core::ScenarioSpec;
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::{Error, Result};
use crate::io::{self, Manifest};
use crate::plot;
use crate::runner::{Runner, Type1Settings};

pub fn run(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    match cfg.command {
        Command::Bias => cmd_bias(cfg, stdout),
        Command::Scenario1 | Command::Scenario2 | Command::NullCheck => cmd_simulate(cfg, stdout),
        Command::Test => cmd_test(cfg, stdout),
        Command::Plot => cmd_plot(cfg, stdout),
    }
}

fn say(stdout: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<()> {
    writeln!(stdout, "{line}").map_err(|e| Error::io("<stdout>", e))
}

/// Scenario settings a simulation command sweeps over.
pub fn specs_for(cfg: &RunConfig) -> Vec<ScenarioSpec> {
    match cfg.command {
        Command::Scenario1 => vec![ScenarioSpec::SCENARIO1],
        Command::Scenario2 => cfg
            .beta0
            .iter()
            .flat_map(|&beta0| cfg.beta2.iter().map(move |&beta2| ScenarioSpec::OmittedPredictor { beta0, beta2 }))
            .collect(),
        Command::NullCheck => cfg.beta0.iter().map(|&beta0| ScenarioSpec::NullPoisson { beta0 }).collect(),
        _ => vec![],
    }
}

fn manifest(cfg: &RunConfig, grid: &SizeGrid, total_fits: u64, failed_fits: u64, threads: usize, wall: f64) -> Result<Manifest> {
    Ok(Manifest {
        command: cfg.command.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: serde_json::to_value(cfg)?,
        grid: grid.sizes.clone(),
        total_fits,
        failed_fits,
        threads,
        wall_seconds: wall,
    })
}

fn cmd_simulate(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let grid = harness::make_grid(&cfg.grid)?;
    let runner = Runner::new(cfg.threads)?;
    let settings = Type1Settings {
        k: cfg.k,
        permutation: PermutationOptions { n_perm: cfg.n_perm, add_one: cfg.add_one, irls: IrlsOptions::default() },
        methods: cfg.method_set,
        alpha: cfg.alpha,
        master_seed: cfg.master_seed,
    };
    let mut estimates = Vec::new();
    let (mut fits, mut failed, mut wall) = (0, 0, 0.0);
    for spec in specs_for(cfg) {
        let run = runner.run_type1_experiment(&spec, &grid, &settings)?;
        for e in &run.estimates {
            let flag = if e.inside_band() { "" } else { "  *outside band*" };
            say(stdout, format_args!("{spec} n={:<7} {:<11} rate={:.4}{flag}", e.n, e.method.name(), e.rate))?;
        }
        fits += run.total_fits;
        failed += run.failed_fits;
        wall += run.wall_seconds;
        estimates.extend(run.estimates);
    }
    let results = cfg.out.join("results.csv");
    io::write_results(&results, &estimates, cfg.master_seed)?;
    io::write_json(&cfg.out.join("manifest.json"), &manifest(cfg, &grid, fits, failed, runner.threads(), wall)?)?;
    say(stdout, format_args!("wrote {} ({} fits, {} failed)", results.display(), fits, failed))
}

fn cmd_bias(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let grid = harness::make_grid(&cfg.grid)?;
    let runner = Runner::new(cfg.threads)?;
    let run = runner.run_bias_experiment(cfg.lambda, cfg.threshold, &grid, cfg.k, cfg.master_seed)?;
    for &n in &grid.sizes {
        let b: Vec<f64> = run.records.iter().filter(|r| r.n == n).map(|r| r.bias).collect();
        say(stdout, format_args!("n={n:<8} median bias={:+.6} IQR={:.6}", median(&b), iqr(&b)))?;
    }
    let path = cfg.out.join("bias.csv");
    io::write_bias(&path, &run.records)?;
    io::write_json(&cfg.out.join("manifest.json"), &manifest(cfg, &grid, 0, 0, runner.threads(), run.wall_seconds)?)?;
    say(stdout, format_args!("wrote {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub n: usize,
    pub beta0: f64,
    pub beta1: f64,
    pub se_beta1: f64,
    pub wald_z: f64,
    pub wald_p: f64,
    pub permutation_p: f64,
    pub permutation_count: u32,
    pub n_perm: u32,
    pub n_failed_fits: u32,
    pub unreliable: bool,
    pub seed: u64,
}

fn cmd_test(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let input = cfg.input.as_deref().ok_or_else(|| Error::usage("`test` needs an input CSV"))?;
    let data = io::read_dataset(input)?;
    if data.len() < 3 {
        return Err(Error::usage(format!("need at least 3 rows, got {}", data.len())));
    }
    let irls = IrlsOptions::default();
    let fit = glm::fit_poisson_columns(&data.y, Some(&data.x1), &irls).map_err(|e| Error::usage(e.to_string()))?;
    match fit.status {
        FitStatus::Ok => {}
        FitStatus::DegenerateAllZero => return Err(Error::usage("all outcomes are zero; the slope is not estimable")),
        FitStatus::Singular => return Err(Error::usage("x1 is constant; the slope is not estimable")),
        FitStatus::MaxIter => return Err(Error::usage("the Poisson fit did not converge on the original data")),
    }
    let wald = glm::wald_pvalue(&fit, 1).map_err(|e| Error::usage(e.to_string()))?;
    let runner = Runner::new(cfg.threads)?;
    let options = PermutationOptions { n_perm: cfg.n_perm, add_one: cfg.add_one, irls };
    let perm = runner.permutation_pvalue(&data, &options, SeedPath::new(cfg.master_seed))?;
    let report = TestReport {
        n: data.len(),
        beta0: fit.coefficients[0],
        beta1: fit.coefficients[1],
        se_beta1: fit.standard_errors[1],
        wald_z: wald.z,
        wald_p: wald.p_value,
        permutation_p: perm.p_value,
        permutation_count: perm.count,
        n_perm: perm.n_perm,
        n_failed_fits: perm.n_failed_fits,
        unreliable: perm.unreliable,
        seed: cfg.master_seed,
    };
    say(stdout, format_args!("n                = {}", report.n))?;
    say(stdout, format_args!("beta1            = {:.6} (se {:.6})", report.beta1, report.se_beta1))?;
    say(stdout, format_args!("Wald z, p        = {:.4}, {:.6}", report.wald_z, report.wald_p))?;
    say(stdout, format_args!("permutation p    = {:.6} ({} of {})", report.permutation_p, report.permutation_count, report.n_perm - report.n_failed_fits))?;
    say(stdout, format_args!("N_perm           = {}", report.n_perm))?;
    say(stdout, format_args!("n_failed_fits    = {}{}", report.n_failed_fits, if report.unreliable { " (unreliable)" } else { "" }))?;
    if !cfg.out.as_os_str().is_empty() {
        io::write_json(&cfg.out, &report)?;
    }
    Ok(())
}

fn cmd_plot(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let input = cfg.input.as_deref().ok_or_else(|| Error::usage("`plot` needs an input CSV"))?;
    let table = io::read_table(input)?;
    let svg = plot::render(&table).map_err(|e| Error::Schema { path: input.to_path_buf(), message: e.to_string() })?;
    if let Some(parent) = cfg.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(&cfg.out, svg).map_err(|e| Error::io(&cfg.out, e))?;
    say(stdout, format_args!("wrote {}", cfg.out.display()))
}
