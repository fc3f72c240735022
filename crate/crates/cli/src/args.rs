use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fairpc_core::SolverChoice;

#[derive(Debug, Parser)]
#[command(name = "fairpc", version, about = "Fair principal components for grouped tabular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a fair basis and write components, diagnostics and the manifest.
    Fit(FitArgs),
    /// Per-group marginal, incremental and reconstruction losses by rank.
    Losses(LossesArgs),
    /// Primal value, dual value and duality gap by rank.
    Gap(GapArgs),
    /// Brute-force rank-1 optimum for regenerating reference values.
    #[command(hide = true)]
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    Auto,
    Brent,
    FrankWolfe,
}

impl From<SolverArg> for SolverChoice {
    fn from(s: SolverArg) -> Self {
        match s {
            SolverArg::Auto => SolverChoice::Auto,
            SolverArg::Brent => SolverChoice::Brent,
            SolverArg::FrankWolfe => SolverChoice::FrankWolfe,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub input: PathBuf,

    /// Column holding the group label.
    #[arg(long = "group-col")]
    pub group_col: String,

    /// Protected attributes to remove before encoding.
    #[arg(long, value_delimiter = ',')]
    pub drop: Vec<String>,

    /// Skip group-wise scaling to unit variance.
    #[arg(long)]
    pub no_standardize: bool,

    /// Skip group-wise centering.
    #[arg(long)]
    pub no_center: bool,

    /// Most categories a text column may one-hot encode to.
    #[arg(long, default_value_t = 64)]
    pub max_categories: usize,

    /// Directory for the artifacts; created if missing.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,

    /// Leave wall-clock timings out of the JSON artifacts.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Target rank.
    #[arg(long)]
    pub rank: usize,

    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    pub solver: SolverArg,

    /// Frank-Wolfe stopping threshold on the weight update.
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Frank-Wolfe iteration limit.
    #[arg(long)]
    pub max_iter: Option<usize>,

    /// Recorded in the manifest; fitting itself is deterministic.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,

    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Pad a rank-deficient basis with an orthonormal complement.
    #[arg(long)]
    pub complete: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LossesArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,

    /// Also report standard PCA on the pooled groups.
    #[arg(long)]
    pub baseline: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GapArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: InputArgs,

    /// Random unit vectors to sample.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,

    /// Compass-search refinement steps on the best sample.
    #[arg(long, default_value_t = 2000)]
    pub refine: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Use the angle grid with this many steps instead (two features only).
    #[arg(long)]
    pub grid: Option<usize>,
}
