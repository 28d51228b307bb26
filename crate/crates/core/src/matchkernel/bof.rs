use crate::codebook::Codebook;
use crate::error::{check_dim, Result};
use crate::pyramid::VideoDescriptorSet;

/// Normalized codeword histogram, kept as integer counts so that dot
/// products are exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BofHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl BofHistogram {
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Bin frequencies; all zero for an empty video.
    pub fn values(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let n = self.total as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }

    /// `sum_c (n_c / |X|)(n'_c / |Y|)`, formed as one integer sum and a
    /// single division.
    pub fn dot(&self, other: &Self) -> f64 {
        if self.total == 0 || other.total == 0 {
            return 0.0;
        }
        let matches: u64 = self
            .counts
            .iter()
            .zip(&other.counts)
            .map(|(a, b)| a * b)
            .sum();
        matches as f64 / (self.total as f64 * other.total as f64)
    }
}

pub fn bof_histogram(video: &VideoDescriptorSet, codebook: &Codebook) -> Result<BofHistogram> {
    check_dim(codebook.dim(), video.descriptor_dim())?;
    let mut counts = vec![0u64; codebook.size()];
    for d in video.descriptors() {
        counts[codebook.quantize(&d.vec)?] += 1;
    }
    Ok(BofHistogram {
        counts,
        total: video.len() as u64,
    })
}

/// 1 when `x` and `y` share their nearest codeword, else 0.
pub fn delta(x: &[f64], y: &[f64], codebook: &Codebook) -> Result<u8> {
    Ok(u8::from(codebook.quantize(x)? == codebook.quantize(y)?))
}
