//! `mmk`: multiresolution match-kernel pipeline from depth frames to
//! evaluation reports.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use config::{
    DescriptorArg, DetectorArg, FileConfig, GammaSetting, ModeArg, ProtocolArg, WeightsArg,
};

#[derive(Debug, Parser)]
#[command(
    name = "mmk",
    version,
    about = "Multiresolution match kernels for video classification"
)]
struct Cli {
    /// TOML file setting any flag by its long name; command-line flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect interest points in PGM frame directories and write descriptor files.
    Extract(ExtractArgs),
    /// Train a codebook on pooled descriptors.
    Dict(DictArgs),
    /// Turn descriptor files into BoF or MMK feature vectors.
    Featurize(FeaturizeArgs),
    /// Train a one-vs-rest linear classifier on a feature file.
    Train(TrainArgs),
    /// Predict labels for a feature file with a trained model.
    Predict(PredictArgs),
    /// Subject-wise evaluation from a feature file or, refitting the codebook per fold, from descriptors.
    Eval(EvalArgs),
    /// Compare feature-map dot products with the directly summed kernel.
    KernelCheck(KernelCheckArgs),
    /// Write the synthetic order-sensitive gesture dataset.
    Synth(SynthArgs),
    /// Time featurization as the number of descriptors grows.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Manifest whose paths are directories of PGM frames.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub descriptor: Option<DescriptorArg>,
    #[arg(long, value_enum)]
    pub detector: Option<DetectorArg>,
    /// Grid spacing for the dense detector [default: 8].
    #[arg(long)]
    pub stride: Option<u32>,
    /// Points kept per video by the temporal detector [default: 500].
    #[arg(long)]
    pub top_k: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct CodebookOpts {
    /// Codebook size D.
    #[arg(long)]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub codebook_seed: Option<u64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    /// RBF bandwidth: `median` or a positive number.
    #[arg(long)]
    pub gamma: Option<GammaSetting>,
}

#[derive(Debug, Clone, Args)]
pub struct PyramidOpts {
    /// Pyramid levels L [default: 3].
    #[arg(long)]
    pub levels: Option<usize>,
    #[arg(long, value_enum)]
    pub weights: Option<WeightsArg>,
    /// Ridge added to the codebook Gram matrix [default: 1e-8].
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SvmOpts {
    #[arg(long)]
    pub svm_c: Option<f64>,
    #[arg(long)]
    pub svm_seed: Option<u64>,
    /// Scale feature vectors to unit L2 norm.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub normalize: Option<bool>,
}

#[derive(Debug, Args)]
pub struct DictArgs {
    /// Descriptor manifest.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub codebook: CodebookOpts,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long = "codebook")]
    pub codebook_path: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Overrides the bandwidth stored with the codebook.
    #[arg(long)]
    pub gamma: Option<GammaSetting>,
    #[command(flatten)]
    pub pyramid: PyramidOpts,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub svm: SvmOpts,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Precomputed feature file (codebook fixed across folds).
    #[arg(long, conflicts_with = "manifest")]
    pub features: Option<PathBuf>,
    /// Descriptor manifest; the codebook is refit on each fold's training videos.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub protocol: Option<ProtocolArg>,
    /// Subjects used for training in each split run [default: half].
    #[arg(long)]
    pub train_subjects: Option<usize>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub split_seed: Option<u64>,
    /// Report file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Confusion matrix CSV.
    #[arg(long)]
    pub confusion: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[command(flatten)]
    pub codebook: CodebookOpts,
    #[command(flatten)]
    pub pyramid: PyramidOpts,
    #[command(flatten)]
    pub svm: SvmOpts,
}

#[derive(Debug, Args)]
pub struct KernelCheckArgs {
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long = "codebook")]
    pub codebook_path: Option<PathBuf>,
    /// MMK feature file written by `featurize` from the same manifest.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub gamma: Option<GammaSetting>,
    #[arg(long, value_enum)]
    pub weights: Option<WeightsArg>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Video pairs to check [default: 20].
    #[arg(long)]
    pub pairs: Option<usize>,
    /// Allowed `|dot - exact| / max(1, |exact|)` [default: 1e-6].
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub samples_per_class: Option<usize>,
    #[arg(long)]
    pub subjects: Option<u32>,
    #[arg(long)]
    pub frames: Option<u32>,
    #[arg(long)]
    pub width: Option<u32>,
    #[arg(long)]
    pub height: Option<u32>,
    #[arg(long)]
    pub blob_radius: Option<f64>,
    #[arg(long)]
    pub descriptors_per_frame: Option<usize>,
    #[arg(long)]
    pub descriptor_dim: Option<usize>,
    #[arg(long)]
    pub prototypes: Option<usize>,
    #[arg(long)]
    pub noise_sigma: Option<f64>,
    #[arg(long)]
    pub synth_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, default_value_t = 256)]
    pub clusters: usize,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Descriptor counts to time, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [10_000usize, 20_000])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fail when time grows faster than this multiple of the size growth.
    #[arg(long, default_value_t = 1.25)]
    pub max_slowdown: f64,
}

fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MMK_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .with_context(|| format!("MMK_THREADS must be a non-negative integer, got `{raw}`"))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    init_threads().context("config stage")?;
    let cfg = match &cli.config {
        Some(p) => FileConfig::load(p).context("config stage")?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Extract(a) => commands::extract(&a, &cfg).context("extract stage"),
        Command::Dict(a) => commands::dict(&a, &cfg).context("codebook stage"),
        Command::Featurize(a) => commands::featurize(&a, &cfg).context("featurize stage"),
        Command::Train(a) => commands::train(&a, &cfg).context("train stage"),
        Command::Predict(a) => commands::predict(&a, &cfg).context("predict stage"),
        Command::Eval(a) => commands::eval(&a, &cfg).context("eval stage"),
        Command::KernelCheck(a) => commands::kernel_check(&a, &cfg).context("kernel-check stage"),
        Command::Synth(a) => commands::synth(&a, &cfg).context("synth stage"),
        Command::Bench(a) => commands::bench(&a).context("bench stage"),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_target(false)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
