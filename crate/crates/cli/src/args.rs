use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use elastic_kmeans::alignment::{DpConfig, KarcherConfig};
use elastic_kmeans::clustering::KmeansConfig;
use elastic_kmeans::simulation::NoiseScale;

#[derive(Debug, Parser)]
#[command(name = "elastic-kmeans", version, about = "Elastic k-means clustering of functional data")]
pub struct Cli {
    /// Worker threads for alignment; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate simulated sample files with embedded true labels.
    Simulate(SimulateArgs),
    /// Cluster a sample file into K groups and write the result bundle.
    Cluster(ClusterArgs),
    /// Fit K = 1..K_max and choose K by BIC.
    SelectK(SelectKArgs),
    /// Run an experiment grid and tabulate mean ARI and BIC selection rates.
    Replicate(ReplicateArgs),
    /// Pointwise mean and standard-deviation bands per label group.
    Summarize(SummarizeArgs),
    /// Convert a plain wide CSV (one function per row) to a sample file.
    Import(ImportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Sim1,
    Sim2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseArg {
    /// `τ` is the variance of the bump amplitudes.
    Variance,
    /// `τ` is their standard deviation.
    StdDev,
}

impl From<NoiseArg> for NoiseScale {
    fn from(n: NoiseArg) -> Self {
        match n {
            NoiseArg::Variance => NoiseScale::Variance,
            NoiseArg::StdDev => NoiseScale::StdDev,
        }
    }
}

/// Alignment and clustering settings shared by the analysis commands.
#[derive(Debug, Clone, Args)]
pub struct AlgoArgs {
    /// Seed for k-means initializations.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Resample the input onto a uniform grid with this many points.
    #[arg(long)]
    pub grid_size: Option<usize>,
    /// Grid points between dynamic-programming lattice nodes.
    #[arg(long, default_value_t = 10)]
    pub dp_stride: usize,
    /// Largest step component of the lattice; slopes are ratios of coprime steps.
    #[arg(long, default_value_t = 7)]
    pub dp_slopes: usize,
    /// Half-width of a full-resolution band searched around the lattice path.
    #[arg(long, default_value_t = 0)]
    pub dp_refine: usize,
    /// Cosine modes for the continuous refinement of final warpings; 0 disables it.
    #[arg(long, default_value_t = 24)]
    pub dp_polish: usize,
    /// Report the smaller of the two alignment directions as the distance.
    #[arg(long)]
    pub symmetric_distance: bool,
    /// Random initializations; the lowest final cost wins.
    #[arg(long, default_value_t = 10)]
    pub restarts: usize,
    /// Stop when the mean relative template change falls below this.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iter: usize,
}

impl AlgoArgs {
    pub fn dp(&self) -> DpConfig {
        DpConfig::new(self.dp_stride, self.dp_slopes)
            .refined(self.dp_refine)
            .polished(self.dp_polish)
            .symmetric(self.symmetric_distance)
    }

    pub fn kmeans(&self, k: usize) -> KmeansConfig {
        KmeansConfig { k, n_restarts: self.restarts, max_iter: self.max_iter, epsilon: self.epsilon, dp: self.dp(), seed: self.seed }
    }

    pub fn karcher(&self) -> KarcherConfig {
        KarcherConfig { dp: self.dp(), ..KarcherConfig::default() }
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment grid JSON; writes one file per (setting, replicate) into --out.
    #[arg(long, conflicts_with_all = ["generator", "n", "tau", "k_star", "seed"])]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Generator::Sim1)]
    pub generator: Generator,
    #[arg(long, default_value_t = 120)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub tau: f64,
    #[arg(long, default_value_t = 2)]
    pub k_star: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = elastic_kmeans::simulation::DEFAULT_GRID_LEN)]
    pub grid_size: usize,
    #[arg(long, value_enum, default_value_t = NoiseArg::Variance)]
    pub noise_scale: NoiseArg,
    /// Output file, or directory when --config is given.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    pub input: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Output directory for the result bundle.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Print the adjusted Rand index against the labels embedded in the input.
    #[arg(long)]
    pub emit_ari: bool,
    #[command(flatten)]
    pub algo: AlgoArgs,
}

#[derive(Debug, Args)]
pub struct SelectKArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 6)]
    pub kmax: usize,
    /// Fraction of variance the retained principal components must explain.
    #[arg(long, default_value_t = 0.95)]
    pub rho: f64,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub algo: AlgoArgs,
}

#[derive(Debug, Args)]
pub struct ReplicateArgs {
    /// Experiment grid JSON.
    pub config: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[command(flatten)]
    pub algo: AlgoArgs,
}

#[derive(Debug, Args)]
pub struct SummarizeArgs {
    pub input: PathBuf,
    /// Labels CSV as written by `cluster` (`index,label`); overrides embedded labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Treat the whole sample as one group even if it carries labels.
    #[arg(long)]
    pub single_group: bool,
    /// Band half-width in standard deviations.
    #[arg(long, default_value_t = 2.0)]
    pub n_sd: f64,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    pub input: PathBuf,
    /// Coordinates per function; each row holds them one after another.
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Skip the first row as column names.
    #[arg(long)]
    pub has_header: bool,
    /// The last column is a 1-based cluster label.
    #[arg(long)]
    pub label_column: bool,
    #[arg(long, short)]
    pub out: PathBuf,
}
