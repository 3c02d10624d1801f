use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mmmt_core::scoring::{MeanKind, ReportScale, DEFAULT_K};

#[derive(Debug, Parser)]
#[command(name = "mmmt", version, about = "Simulate and score real-time multi-model inference workloads")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the selected scenarios and write report, timelines and summary.
    Run(RunArgs),
    /// Re-run one scenario for each trigger probability of one edge.
    Sweep(SweepArgs),
    /// Check the workload and, for valid scenarios, the simulated schedule.
    Validate(RunArgs),
    /// Recompute scores from timeline CSVs written by `run`.
    Score(ScoreArgs),
    /// Write the suite (built-in unless `--suite`) as JSON.
    ExportSuite(ExportSuiteArgs),
    /// Write a hardware preset as JSON.
    ExportHardware(ExportHardwareArgs),
    /// Write the resolved cost table as JSON.
    ExportCosts(ExportCostsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeanArg {
    Arithmetic,
    Geometric,
}

impl From<MeanArg> for MeanKind {
    fn from(m: MeanArg) -> Self {
        match m {
            MeanArg::Arithmetic => MeanKind::Arithmetic,
            MeanArg::Geometric => MeanKind::Geometric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScaleArg {
    Unit,
    Percent,
}

impl From<ScaleArg> for ReportScale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Unit => ReportScale::Unit,
            ScaleArg::Percent => ReportScale::Percent,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Suite JSON file. The built-in suite when omitted.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Scenario id; repeat for several. Every scenario when omitted.
    #[arg(long = "scenario")]
    pub scenarios: Vec<String>,
    /// Hardware JSON file, or a preset `A`..`M` with an optional PE count (`J-8192`).
    #[arg(long, default_value = "J-4096")]
    pub hw: String,
    /// Cost table JSON file. Synthetic roofline costs when omitted.
    #[arg(long, conflicts_with_all = ["efficiency", "uniform_latency"])]
    pub costs: Option<PathBuf>,
    /// Single efficiency for synthetic costs instead of the per-dataflow defaults.
    #[arg(long, conflicts_with = "uniform_latency")]
    pub efficiency: Option<f64>,
    /// Same latency in ms for every model on every unit.
    #[arg(long)]
    pub uniform_latency: Option<f64>,
    /// Energy in mJ paired with `--uniform-latency`.
    #[arg(long, default_value_t = 0.0, requires = "uniform_latency")]
    pub uniform_energy: f64,
    /// Scheduler policy: latency-greedy or round-robin.
    #[arg(long, default_value = "latency-greedy")]
    pub policy: String,
    /// Benchmark window in seconds.
    #[arg(long, default_value_t = 1.0)]
    pub duration: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Deadline sensitivity per second.
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: f64,
    /// Energy ceiling in mJ. Defaults to the cost file's value; required otherwise.
    #[arg(long)]
    pub emax: Option<f64>,
    #[arg(long, value_enum, default_value_t = MeanArg::Arithmetic)]
    pub mean: MeanArg,
    #[arg(long, value_enum, default_value_t = ScaleArg::Unit)]
    pub scale: ScaleArg,
    /// Count untriggered requests in the QoE denominator.
    #[arg(long)]
    pub count_untriggered: bool,
    /// Zero the jitter of every input source.
    #[arg(long)]
    pub no_jitter: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Edge to vary, as `UPSTREAM->DOWNSTREAM`.
    #[arg(long)]
    pub edge: String,
    /// Trigger probabilities, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_values_t = [0.0, 0.25, 0.5, 0.75, 1.0])]
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Timeline CSV; repeat for several scenarios.
    #[arg(long = "log", required = true)]
    pub logs: Vec<PathBuf>,
    /// Suite JSON file. Taken from the log's recorded config when omitted.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Overrides the recorded deadline sensitivity.
    #[arg(long)]
    pub k: Option<f64>,
    /// Overrides the recorded energy ceiling.
    #[arg(long)]
    pub emax: Option<f64>,
    #[arg(long, value_enum)]
    pub mean: Option<MeanArg>,
    #[arg(long, value_enum)]
    pub scale: Option<ScaleArg>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExportSuiteArgs {
    /// Suite JSON file to normalize. The built-in suite when omitted.
    #[arg(long)]
    pub suite: Option<PathBuf>,
    /// Destination file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportHardwareArgs {
    /// Preset `A`..`M` with an optional PE count (`J-8192`).
    #[arg(long, default_value = "J-4096")]
    pub hw: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ExportCostsArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Destination file; stdout when omitted.
    #[arg(long = "to")]
    pub to: Option<PathBuf>,
}
