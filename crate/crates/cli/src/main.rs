//! `covext` command-line front end.

mod commands;
mod settings;
mod specs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "covext", version, about = "Rational covariance extension, spectral estimation and texture models")]
struct Cli {
    /// Flat `key = value` file supplying defaults for any long flag.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Estimate covariances from a data record.
    Estimate(EstimateArgs),
    /// Solve a covariance extension problem.
    Solve(SolveArgs),
    /// Map a weight between the soft and hard formulations.
    ConvertWeight(ConvertWeightArgs),
    /// Report sufficient conditions and cone checks for a problem.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo estimation study on a simulated random field.
    Simulate(SimulateArgs),
    /// Binary texture identification and synthesis.
    #[command(subcommand)]
    Texture(TextureCommand),
}

#[derive(Subcommand, Debug)]
enum TextureCommand {
    /// Fit a thresholded-Gaussian model to a binary image or record.
    Analyze(TextureAnalyzeArgs),
    /// Draw a texture from a fitted model.
    Synth(TextureSynthArgs),
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    /// Data record (text or binary tensor).
    #[arg(long)]
    data: Option<String>,
    /// Box half-widths `n1[,n2,...]`; one value is used on every axis.
    #[arg(long)]
    lambda_box: Option<specs::Extents>,
    /// `biased` or `unbiased`.
    #[arg(long)]
    mode: Option<specs::Estimator>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[arg(long)]
    cov: Option<String>,
    /// Prior coefficient file, or `me` for the maximum-entropy prior `P = 1`.
    #[arg(long)]
    prior: Option<specs::Prior>,
    #[arg(long)]
    mode: Option<covext::Mode>,
    /// `scalar:λ` or `file:PATH`.
    #[arg(long)]
    weight: Option<specs::WeightSpec>,
    /// Quadrature points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Use the half-step offset grid.
    #[arg(long)]
    offset: Option<bool>,
    #[arg(long)]
    out: Option<String>,
    /// CSV of `P/Q̂` on the solver grid.
    #[arg(long)]
    spectrum: Option<String>,
}

#[derive(Args, Debug)]
pub struct ConvertWeightArgs {
    #[arg(long)]
    solution: Option<String>,
    /// `soft2hard` or `hard2soft`.
    #[arg(long)]
    direction: Option<specs::Direction>,
    /// Weight file; defaults to the weight stored with the solution.
    #[arg(long)]
    weight: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    #[arg(long)]
    cov: Option<String>,
    #[arg(long)]
    prior: Option<specs::Prior>,
    #[arg(long)]
    weight: Option<specs::WeightSpec>,
    /// Solution whose `q̂` is used to report the weight conversion scales.
    #[arg(long)]
    solution: Option<String>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Only `default` is built in.
    #[arg(long)]
    system: Option<String>,
    /// Samples per axis.
    #[arg(long = "N")]
    steps: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    lambda_box: Option<usize>,
    /// Solver quadrature points per axis.
    #[arg(long)]
    grid: Option<usize>,
    /// Starting grid for the reference covariances.
    #[arg(long)]
    truth_grid: Option<usize>,
    /// Also run the hard-constrained procedures.
    #[arg(long)]
    hard: bool,
    #[arg(long)]
    out_dir: Option<String>,
}

#[derive(Args, Debug)]
pub struct TextureAnalyzeArgs {
    /// PBM/PGM/PNG image, or a data record.
    #[arg(long)]
    image: Option<String>,
    #[arg(long)]
    lambda_box: Option<usize>,
    /// Soft weight `W = λ I`.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    filter_grid: Option<usize>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args, Debug)]
pub struct TextureSynthArgs {
    #[arg(long)]
    model: Option<String>,
    /// `n1[,n2]`; one value gives a square.
    #[arg(long)]
    size: Option<specs::Extents>,
    #[arg(long)]
    seed: Option<u64>,
    /// `.pbm`/`.pgm` write an image, anything else a data record.
    #[arg(long)]
    out: Option<String>,
}

/// Failure with the process exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        Self { code: 2, msg: msg.into() }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        Self { code: 3, msg: msg.into() }
    }

    pub fn with_context(self, ctx: impl std::fmt::Display) -> Self {
        Self { code: self.code, msg: format!("{ctx}: {}", self.msg) }
    }
}

impl From<covext::Error> for CliError {
    fn from(e: covext::Error) -> Self {
        use covext::Error as E;
        let code = match &e {
            E::InvalidArgument(_) | E::GridTooCoarse { .. } | E::InvalidGrid(_) => 2,
            E::Io(_)
            | E::Parse { .. }
            | E::Image(_)
            | E::NotHermitian(_)
            | E::InvalidIndexSet(_)
            | E::InvalidWeight(_)
            | E::NegativeField { .. }
            | E::NonPositive { .. } => 3,
            E::IndexSetMismatch | E::RecordTooShort(_) => 4,
            E::Diverged { .. } | E::LineSearchStalled { .. } => 5,
            E::NoSolution { .. } => 6,
            E::SingularFit { .. } | E::Numerical(_) | E::Unstable(_) => 7,
        };
        Self { code, msg: e.to_string() }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = settings::Settings::load(cli.config.as_deref()).and_then(|mut s| match cli.command {
        Command::Estimate(a) => commands::estimate(a, &mut s),
        Command::Solve(a) => commands::solve(a, &mut s),
        Command::ConvertWeight(a) => commands::convert_weight(a, &mut s),
        Command::Analyze(a) => commands::analyze(a, &mut s),
        Command::Simulate(a) => commands::simulate(a, &mut s),
        Command::Texture(TextureCommand::Analyze(a)) => commands::texture_analyze(a, &mut s),
        Command::Texture(TextureCommand::Synth(a)) => commands::texture_synth(a, &mut s),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
