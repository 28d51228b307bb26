use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::Deserialize;

/// Values read from `--config`. Keys match the long flag names; a flag given
/// on the command line wins over the file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    // paths
    pub manifest: Option<PathBuf>,
    pub codebook: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub confusion: Option<PathBuf>,
    // descriptors
    pub descriptor: Option<DescriptorArg>,
    pub detector: Option<DetectorArg>,
    pub stride: Option<u32>,
    pub top_k: Option<usize>,
    // codebook
    pub clusters: Option<usize>,
    pub codebook_seed: Option<u64>,
    pub max_iters: Option<usize>,
    pub gamma: Option<GammaSetting>,
    // features
    pub mode: Option<ModeArg>,
    pub levels: Option<usize>,
    pub weights: Option<WeightsArg>,
    pub lambda: Option<f64>,
    // classifier and evaluation
    pub svm_c: Option<f64>,
    pub svm_seed: Option<u64>,
    pub normalize: Option<bool>,
    pub protocol: Option<ProtocolArg>,
    pub train_subjects: Option<usize>,
    pub runs: Option<usize>,
    pub split_seed: Option<u64>,
    // synthetic data
    pub samples_per_class: Option<usize>,
    pub subjects: Option<u32>,
    pub frames: Option<u32>,
    pub width: Option<u32>,
    pub height: Option<u32>,
    pub blob_radius: Option<f64>,
    pub descriptors_per_frame: Option<usize>,
    pub descriptor_dim: Option<usize>,
    pub prototypes: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub synth_seed: Option<u64>,
    // kernel-check
    pub pairs: Option<usize>,
    pub tolerance: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Command-line value if present, else the config file value.
pub fn pick<T: Clone>(cli: &Option<T>, file: &Option<T>) -> Option<T> {
    cli.clone().or_else(|| file.clone())
}

pub fn require<T: Clone>(cli: &Option<T>, file: &Option<T>, flag: &str) -> Result<T> {
    match pick(cli, file) {
        Some(v) => Ok(v),
        None => bail!("missing --{flag} (or `{flag}` in the config file)"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DescriptorArg {
    Hog,
    Lbp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectorArg {
    Dense,
    Temporal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Bof,
    Mmk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightsArg {
    Dyadic,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolArg {
    Split,
    Loso,
}

/// `median` or a positive number.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(try_from = "RawGamma")]
pub enum GammaSetting {
    Median,
    Fixed(f64),
}

impl FromStr for GammaSetting {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("median") {
            return Ok(GammaSetting::Median);
        }
        match s.parse::<f64>() {
            Ok(g) if g > 0.0 && g.is_finite() => Ok(GammaSetting::Fixed(g)),
            _ => Err(format!(
                "gamma must be `median` or a positive number, got `{s}`"
            )),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawGamma {
    Number(f64),
    Text(String),
}

impl TryFrom<RawGamma> for GammaSetting {
    type Error = String;

    fn try_from(raw: RawGamma) -> std::result::Result<Self, String> {
        match raw {
            RawGamma::Number(g) => g.to_string().parse(),
            RawGamma::Text(s) => s.parse(),
        }
    }
}
