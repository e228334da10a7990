use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{self, Command, Overrides, Preset, RunConfig};
use crate::error::Result;

#[derive(Debug, Parser)]
#[command(name = "permpois", version, about = "Poisson regression Type I error studies and permutation p-values")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Bias of the rate estimate when small counts are recorded as zero.
    Bias(Flags),
    /// Type I error with a rounded F(8,8) outcome.
    Scenario1(Flags),
    /// Type I error with an omitted predictor (all four settings unless --beta0/--beta2).
    Scenario2(Flags),
    /// Type I error of a correctly specified model.
    NullCheck(Flags),
    /// Wald and permutation p-values for the x1 slope of a `y,x1` CSV.
    Test(Flags),
    /// Render a results or bias CSV as SVG.
    Plot(Flags),
}

#[derive(Debug, Args, Default)]
pub struct Flags {
    /// Input CSV (test, plot).
    pub input: Option<PathBuf>,
    #[arg(long, value_parser = parse_preset)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Replicates per sample size.
    #[arg(long)]
    pub k: Option<u32>,
    #[arg(long = "n-perm")]
    pub n_perm: Option<u32>,
    /// Log10 size grid, `lo:hi:points[,lo:hi:points]`.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub beta2: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub threshold: Option<u64>,
    /// Output directory (simulations) or file (test JSON, plot SVG).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    /// Comma-separated: wald, permutation.
    #[arg(long)]
    pub methods: Option<String>,
    /// Use (count + 1) / (N + 1) for permutation p-values.
    #[arg(long = "add-one")]
    pub add_one: bool,
    /// Key-value config file; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_preset(s: &str) -> std::result::Result<Preset, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            preset: self.preset,
            seed: self.seed,
            k: self.k,
            n_perm: self.n_perm,
            grid: self.grid.clone(),
            alpha: self.alpha,
            beta0: self.beta0,
            beta2: self.beta2,
            lambda: self.lambda,
            threshold: self.threshold,
            out: self.out.clone(),
            threads: self.threads,
            methods: self.methods.clone(),
            input: self.input.clone(),
            add_one: self.add_one.then_some(true),
        }
    }
}

impl Cmd {
    pub fn split(&self) -> (Command, &Flags) {
        match self {
            Cmd::Bias(f) => (Command::Bias, f),
            Cmd::Scenario1(f) => (Command::Scenario1, f),
            Cmd::Scenario2(f) => (Command::Scenario2, f),
            Cmd::NullCheck(f) => (Command::NullCheck, f),
            Cmd::Test(f) => (Command::Test, f),
            Cmd::Plot(f) => (Command::Plot, f),
        }
    }
}

/// Merge flags, config file and preset into a run configuration.
pub fn resolve(cli: &Cli) -> Result<RunConfig> {
    let (command, flags) = cli.command.split();
    let file = match &flags.config {
        Some(path) => config::load_config_file(path)?,
        None => Overrides::default(),
    };
    RunConfig::resolve(command, flags.overrides().or(file))
}
