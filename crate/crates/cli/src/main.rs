use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

/// Propensity-weighted linear autoencoder recommender: batch runs.
#[derive(Parser)]
#[command(name = "ipslae", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set fit.lambdas=[100,1000]`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Shorthand for `--set output_dir=DIR`.
    #[arg(short, long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and preprocess a raw interaction log into a matrix container.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Split users into train / validation / test with fold-in and holdout items.
    Split,
    /// Fit EASE on the training users, one model per configured lambda.
    Fit {
        /// Replaces fit.lambdas. Repeatable.
        #[arg(long)]
        lambda: Vec<f64>,
    },
    /// Reweight a fitted model's columns by inverse propensity.
    Weight {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        family: FamilyArgs,
        /// Output container; defaults to `<output_dir>/<model stem>_<family>.bin`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the lambda × weighting grid on the validation users and pick a cell.
    Gridsearch,
    /// Evaluate a model on the test users.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        /// Prefix of the report files; defaults to the model file stem.
        #[arg(long)]
        name: Option<String>,
    },
    /// Tabulate weight against training count for the configured family.
    Curve {
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Generate a synthetic corpus with known exposure.
    Synth,
}

#[derive(Args)]
struct FamilyArgs {
    /// power-law, power-law-clipped or log-sigmoid.
    #[arg(long)]
    family: Option<String>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    clip: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
}

impl FamilyArgs {
    fn overrides(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(f) = &self.family {
            out.push(format!("weighting.family=\"{f}\""));
        }
        let nums = [
            ("gamma", self.gamma),
            ("c", self.clip),
            ("beta", self.beta),
            ("alpha", self.alpha),
        ];
        for (k, v) in nums {
            if let Some(v) = v {
                out.push(format!("weighting.{k}={v:?}"));
            }
        }
        out
    }
}

/// A failed run, mapped to an exit code.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Lib(ipslae::Error),
}

impl From<ipslae::Error> for Failure {
    fn from(e: ipslae::Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Lib(e) => match e.kind() {
                ipslae::ErrorKind::Config => 2,
                ipslae::ErrorKind::Data => 3,
                ipslae::ErrorKind::Numerical => 4,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "config: {m}"),
            Failure::Lib(e) => write!(f, "{e}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut overrides = cli.overrides.clone();
    if let Some(d) = &cli.out_dir {
        overrides.push(format!("output_dir={:?}", d.display().to_string()));
    }
    match &cli.command {
        Command::Ingest { input: Some(p) } => {
            overrides.push(format!("data.input={:?}", p.display().to_string()))
        }
        Command::Fit { lambda } if !lambda.is_empty() => {
            let list: Vec<String> = lambda.iter().map(|l| format!("{l:?}")).collect();
            overrides.push(format!("fit.lambdas=[{}]", list.join(",")));
        }
        Command::Weight { family, .. } | Command::Curve { family } => {
            overrides.extend(family.overrides())
        }
        _ => {}
    }
    let config = RunConfig::load(cli.config.as_deref(), &overrides)?;
    std::fs::create_dir_all(&config.output_dir).map_err(|e| {
        Failure::Lib(ipslae::Error::Io {
            path: config.output_dir.clone(),
            source: e,
        })
    })?;

    match cli.command {
        Command::Ingest { .. } => commands::ingest(&config),
        Command::Split => commands::split(&config),
        Command::Fit { .. } => commands::fit(&config),
        Command::Weight { model, out, .. } => commands::weight(&config, &model, out),
        Command::Gridsearch => commands::gridsearch(&config),
        Command::Evaluate { model, name } => commands::evaluate(&config, &model, name),
        Command::Curve { .. } => commands::curve(&config),
        Command::Synth => commands::synth(&config),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
