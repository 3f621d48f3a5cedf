mod commands;
mod config;
mod output;
mod spec;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Coined and continuous-time quantum walks: transfer, periodicity,
/// decoherence and variant search.
#[derive(Debug, Parser)]
#[command(name = "qwalk", version)]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, env = "QWALK_SEED")]
    pub seed: Option<u64>,
    /// Worker threads for parallel sweeps (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// JSON config file. Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a graph and print its JSON document.
    Graph(GraphCmd),
    /// Run a coined walk and report transfer and periodicity.
    Dtqw(DtqwCmd),
    /// Run a continuous-time walk and report transfer and periodicity.
    Ctqw(CtqwCmd),
    /// Sweep the dephasing rate of a coined or continuous walk.
    Decohere(DecohereCmd),
    /// Search cycle variants for perfect and high-amplitude transfer.
    Search(SearchCmd),
    /// Perturb the start state of K̄₂+Cₙ and measure transfer at step 6.
    Robust(RobustCmd),
    /// Interpolate between two K̄₂ families by switching edges on.
    Interp(InterpCmd),
}

#[derive(Debug, Args)]
pub struct GraphCmd {
    /// Spec such as `join k2c n=5`, `diamond n=3 loops=true` or `@graph.json`.
    #[arg(required = true, num_args = 1..)]
    pub spec: Vec<String>,
    /// Write the document here instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct WalkArgs {
    /// Graph spec (see `qwalk graph --help`).
    #[arg(long, short)]
    pub graph: Option<String>,
    #[arg(long)]
    pub source: Option<usize>,
    #[arg(long)]
    pub target: Option<usize>,
    /// Extra vertices to include in the time series.
    #[arg(long, value_delimiter = ',')]
    pub track: Vec<usize>,
    /// Output prefix: writes `<out>.csv` and `<out>.json`. Without it the
    /// JSON report goes to stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DtqwCmd {
    #[command(flatten)]
    pub walk: WalkArgs,
    /// O1, O2, O3, table1:<row>, a JSON vertex map, or `<policy>+<map>`.
    #[arg(long, short)]
    pub policy: Option<String>,
    /// equal, basis:<port>, haar:<count>[:<seed>] or `[[port, re, im], ...]`.
    #[arg(long, short)]
    pub init: Option<String>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub pst_tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct CtqwCmd {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Scan spacing before refinement.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub pst_tol: Option<f64>,
    /// Also dump the adjacency spectrum as JSON.
    #[arg(long)]
    pub spectrum: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecohereCmd {
    #[command(flatten)]
    pub walk: WalkArgs,
    #[arg(long, short)]
    pub policy: Option<String>,
    #[arg(long, short)]
    pub init: Option<String>,
    /// Coined walk: number of noisy steps.
    #[arg(long)]
    pub steps: Option<usize>,
    /// coin, position or both.
    #[arg(long)]
    pub basis: Option<String>,
    /// Dephasing rates to sweep.
    #[arg(long, value_delimiter = ',')]
    pub rates: Vec<f64>,
    /// Run the continuous-time walk to this time instead.
    #[arg(long)]
    pub time: Option<f64>,
    /// Integrator step for the continuous walk.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SearchCmd {
    /// Even cycle length.
    #[arg(long)]
    pub base: Option<usize>,
    #[arg(long)]
    pub max_new: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub policies: Vec<String>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub pst_tol: Option<f64>,
    /// JSON-lines record file. Existing records are kept and their cells skipped.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
    /// Print only records with perfect transfer.
    #[arg(long)]
    pub pst_only: bool,
    /// Print only records with best probability at least this.
    #[arg(long)]
    pub min_p: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RobustCmd {
    #[arg(long, value_delimiter = ',')]
    pub ns: Vec<usize>,
    /// Amplitude defects δ on the last source port.
    #[arg(long, value_delimiter = ',')]
    pub deltas: Vec<f64>,
    /// Phases θ on the last source port.
    #[arg(long, value_delimiter = ',')]
    pub thetas: Vec<f64>,
    /// Include independent random defects on every port.
    #[arg(long)]
    pub random: bool,
    /// Draws per random cell.
    #[arg(long)]
    pub runs: Option<usize>,
    /// CSV output file (default: stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InterpCmd {
    /// Family at coupling 0, without `n=` (e.g. `k2k`).
    #[arg(long)]
    pub from: Option<String>,
    /// Family at coupling 1 (e.g. `k2c`).
    #[arg(long)]
    pub to: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub ns: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub couplings: Vec<f64>,
    /// Step at which the target probability is read.
    #[arg(long)]
    pub steps: Option<usize>,
    /// CSV output file (default: stdout).
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Usage errors are configuration errors (exit 1); exit 2 is reserved for
    // numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
