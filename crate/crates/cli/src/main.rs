mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "specdet",
    version,
    about = "Spectral detection of small anomalous subgraphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a graph and write it as an edge list.
    Generate(GenerateArgs),
    /// Dump the top eigenpairs of a graph's residuals matrix.
    Eigs(EigsArgs),
    /// Estimate the null mean and spread of eigenvector L1 norms.
    Calibrate(CalibrateArgs),
    /// Compute a detection statistic and flagged vertices for one graph.
    Detect(DetectArgs),
    /// Run a Monte Carlo experiment from a config file.
    Mc(McArgs),
    /// Run the oracle verification suites.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseKind {
    Er,
    Cl,
    Rmat,
}

#[derive(Clone, Copy, ValueEnum)]
enum SignalKind {
    None,
    Cluster,
    Bipartite,
}

#[derive(Clone, Copy, ValueEnum)]
enum HypothesisArg {
    H0,
    H1,
}

#[derive(Args)]
struct GenerateArgs {
    /// Experiment config supplying the noise, signal and embedding sections.
    #[arg(long, conflicts_with_all = ["noise", "signal"])]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "er")]
    noise: NoiseKind,
    /// Vertex count of an ER background; CL and R-MAT use --levels.
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    average_degree: Option<f64>,
    #[arg(long, default_value_t = 10)]
    levels: u32,
    #[arg(long, value_enum, default_value = "none")]
    signal: SignalKind,
    #[arg(long, default_value_t = 15)]
    size: usize,
    #[arg(long, default_value_t = 12)]
    left: usize,
    #[arg(long, default_value_t = 25)]
    right: usize,
    #[arg(long, default_value_t = 0.9)]
    signal_p: f64,
    /// Embed on vertices with expected degree below this value.
    #[arg(long)]
    low_degree: Option<f64>,
    #[arg(long, value_enum)]
    hypothesis: Option<HypothesisArg>,
    #[arg(long, default_value_t = 0)]
    trial: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EigsArgs {
    graph: PathBuf,
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write PREFIX.values.csv, PREFIX.vectors.csv and PREFIX.eigs.bin
    /// instead of printing eigenvalues.
    #[arg(long)]
    out_prefix: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// TOML file with `[noise]` and optional `[residuals]` sections.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value_t = 100)]
    m: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sequential: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StatKind {
    Specnorm,
    Chi2,
    L1,
    Spca,
}

#[derive(Args)]
struct DetectArgs {
    graph: PathBuf,
    #[arg(long, value_enum)]
    stat: StatKind,
    /// Null calibration JSON (required for l1).
    #[arg(long)]
    calibration: Option<PathBuf>,
    /// Eigenvectors compared by l1; defaults to the calibration's count.
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, conflicts_with = "lambda")]
    lambda_scale: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    #[arg(long)]
    threshold: Option<f64>,
    /// Evaluate the χ² maximum exactly over all breakpoints.
    #[arg(long)]
    exact: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Trial CSV destination; standard output when absent.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Add the wall-clock runtime_ms column.
    #[arg(long)]
    timing: bool,
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// likelihood-ratio, signal-mass, concentration, delta-k, null-space, chi2-period or all.
    #[arg(long, default_value = "all", value_delimiter = ',')]
    check: Vec<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    sequential: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => commands::generate(a),
        Command::Eigs(a) => commands::eigs(a),
        Command::Calibrate(a) => commands::calibrate(a),
        Command::Detect(a) => commands::detect(a),
        Command::Mc(a) => commands::mc(a),
        Command::Verify(a) => commands::verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}
