//! Descriptor sets to features to evaluation, with the codebook fit on
//! training videos only.

use rayon::prelude::*;

use crate::classify::{make_folds, run_folds, train_linear_ovr, EvalReport, Protocol, SvmParams};
use crate::codebook::{pool_descriptors, train_codebook, Codebook, KMeansParams};
use crate::error::{MmkError, Result};
use crate::matchkernel::{bof_histogram, median_gamma, video_feature_map, KernelBasis};
use crate::pyramid::{PyramidConfig, VideoDescriptorSet};

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMode {
    /// Normalized codeword histogram (length `D`).
    Bof,
    /// Multiresolution match-kernel feature map.
    Mmk(PyramidConfig),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaMode {
    /// Median heuristic over the codebook training descriptors.
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePipeline {
    pub kmeans: KMeansParams,
    pub mode: FeatureMode,
    pub gamma: GammaMode,
    /// Ridge added to `K_ZZ`; `None` uses the basis default.
    pub lambda: Option<f64>,
}

/// A fitted codebook (plus kernel basis in MMK mode).
#[derive(Debug, Clone)]
pub struct FittedFeatures {
    pub codebook: Codebook,
    pub basis: Option<KernelBasis>,
    pub mode: FeatureMode,
}

impl FeaturePipeline {
    pub fn fit(&self, train: &[&VideoDescriptorSet]) -> Result<FittedFeatures> {
        let pool = pool_descriptors(train.iter().copied());
        let codebook = train_codebook(&pool, &self.kmeans)?;
        let basis = match &self.mode {
            FeatureMode::Bof => None,
            FeatureMode::Mmk(_) => {
                let gamma = match self.gamma {
                    GammaMode::Median => median_gamma(&pool, self.kmeans.seed)?,
                    GammaMode::Fixed(g) => g,
                };
                Some(build_basis(codebook.clone(), gamma, self.lambda)?)
            }
        };
        Ok(FittedFeatures {
            codebook,
            basis,
            mode: self.mode.clone(),
        })
    }
}

pub fn build_basis(codebook: Codebook, gamma: f64, lambda: Option<f64>) -> Result<KernelBasis> {
    match lambda {
        Some(l) => KernelBasis::with_lambda(codebook, gamma, l),
        None => KernelBasis::new(codebook, gamma),
    }
}

impl FittedFeatures {
    pub fn transform_one(&self, video: &VideoDescriptorSet) -> Result<Vec<f64>> {
        match (&self.mode, &self.basis) {
            (FeatureMode::Bof, _) => Ok(bof_histogram(video, &self.codebook)?.values()),
            (FeatureMode::Mmk(pcfg), Some(basis)) => {
                Ok(video_feature_map(video, basis, pcfg)?.values)
            }
            (FeatureMode::Mmk(_), None) => Err(MmkError::InvalidConfig(
                "MMK features need a kernel basis".into(),
            )),
        }
    }

    pub fn transform(&self, videos: &[&VideoDescriptorSet]) -> Result<Vec<Vec<f64>>> {
        videos.par_iter().map(|v| self.transform_one(v)).collect()
    }
}

/// Evaluates `pipeline` + linear classifier under `protocol`, refitting the
/// codebook inside every fold from that fold's training videos.
pub fn evaluate_videos(
    videos: &[VideoDescriptorSet],
    pipeline: &FeaturePipeline,
    svm: &SvmParams,
    protocol: Protocol,
) -> Result<EvalReport> {
    let labels = videos
        .iter()
        .map(|v| {
            v.meta.label.ok_or_else(|| {
                MmkError::Evaluation(format!("video '{}' has no label", v.meta.video_id))
            })
        })
        .collect::<Result<Vec<u32>>>()?;
    let subjects: Vec<u32> = videos.iter().map(|v| v.meta.subject).collect();
    let folds = make_folds(&subjects, protocol)?;
    run_folds(&labels, &folds, protocol.name(), |fold| {
        let train: Vec<&VideoDescriptorSet> = fold.train.iter().map(|&i| &videos[i]).collect();
        let test: Vec<&VideoDescriptorSet> = fold.test.iter().map(|&i| &videos[i]).collect();
        let fitted = pipeline.fit(&train)?;
        let x = fitted.transform(&train)?;
        let x_refs: Vec<&[f64]> = x.iter().map(Vec::as_slice).collect();
        let y: Vec<u32> = fold.train.iter().map(|&i| labels[i]).collect();
        let model = train_linear_ovr(&x_refs, &y, svm)?;
        fitted
            .transform(&test)?
            .iter()
            .map(|f| model.predict(f).map(|p| p.0))
            .collect()
    })
}
