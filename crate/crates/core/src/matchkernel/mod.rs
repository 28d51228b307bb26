//! Multiresolution match kernels.
//!
//! With a basis `Z` (the codebook centers), an RBF base kernel `k'` and a
//! whitening matrix `G` satisfying `G^T G = (K_ZZ + lambda I)^-1`, the
//! per-descriptor map `phi(x) = G k_Z(x)` reproduces the approximate kernel
//! `k(x, y) = k_Z(x)^T (K_ZZ + lambda I)^-1 k_Z(y)` as a dot product. Averaging
//! `phi` inside each pyramid voxel, scaling level `i` by `w_i` and
//! concatenating gives a video vector whose dot products equal
//!
//! ```text
//! K(X, Y) = sum_i w_i^2 sum_j 1/(|X_ij| |Y_ij|) sum_{x in X_ij} sum_{y in Y_ij} k(x, y)
//! ```
//!
//! [`mmk_exact`] evaluates that double sum directly and serves as the oracle
//! for [`video_feature_map`].

mod basis;
mod bof;
mod exact;
mod feature_map;

pub use basis::KernelBasis;
pub use bof::{bof_histogram, delta, BofHistogram};
pub use exact::{bof_pyramid_kernel, mmk_exact, pyramid_match_sum};
pub use feature_map::{phi, video_feature_map, video_feature_maps, voxel_feature, VideoFeatureMap};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codebook::squared_distance;
use crate::error::{check_dim, MmkError, Result};

/// Points used by [`median_gamma`] at most.
pub const MEDIAN_SUBSAMPLE: usize = 1000;

/// `exp(-gamma * |x - y|^2)`.
pub fn rbf(x: &[f64], y: &[f64], gamma: f64) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(MmkError::InvalidConfig(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    Ok(rbf_unchecked(x, y, gamma))
}

#[inline]
pub(crate) fn rbf_unchecked(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    (-gamma * squared_distance(x, y)).exp()
}

/// Bandwidth `1 / (2 m^2)` where `m` is the median nonzero pairwise distance
/// over a seeded subsample of at most [`MEDIAN_SUBSAMPLE`] points.
///
/// Coincident pairs are skipped, so repeating points does not shift the
/// median.
pub fn median_gamma(sample: &[&[f64]], seed: u64) -> Result<f64> {
    let dim = sample.first().map_or(0, |p| p.len());
    for p in sample {
        check_dim(dim, p.len())?;
    }
    let picked: Vec<&[f64]> = if sample.len() > MEDIAN_SUBSAMPLE {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = index::sample(&mut rng, sample.len(), MEDIAN_SUBSAMPLE).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| sample[i]).collect()
    } else {
        sample.to_vec()
    };
    let mut dists = Vec::with_capacity(picked.len() * picked.len().saturating_sub(1) / 2);
    for (i, a) in picked.iter().enumerate() {
        for b in &picked[i + 1..] {
            let d = squared_distance(a, b);
            if d > 0.0 {
                dists.push(d.sqrt());
            }
        }
    }
    if dists.is_empty() {
        return Err(MmkError::Numerical(
            "bandwidth undefined: fewer than two distinct points".into(),
        ));
    }
    dists.sort_unstable_by(f64::total_cmp);
    let n = dists.len();
    let median = if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    };
    Ok(1.0 / (2.0 * median * median))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn rbf_values() {
        assert_eq!(rbf(&[0.3, -1.0], &[0.3, -1.0], 2.5).unwrap(), 1.0);
        let v = rbf(&[0.0, 0.0], &[1.0, 0.0], 1.0).unwrap();
        assert!((v - 0.367_879_441_171_442_3).abs() < 1e-15);
        assert!(rbf(&[0.0], &[0.0, 1.0], 1.0).is_err());
        assert!(rbf(&[0.0], &[1.0], 0.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x: Vec<f64> = (0..5).map(|_| rng.random()).collect();
            let y: Vec<f64> = (0..5).map(|_| rng.random()).collect();
            assert_eq!(rbf(&x, &y, 0.7).unwrap(), rbf(&y, &x, 0.7).unwrap());
        }
    }

    #[test]
    fn median_gamma_two_points() {
        let a = [0.0, 0.0];
        let b = [0.0, 2.0];
        assert_eq!(median_gamma(&[&a, &b], 0).unwrap(), 0.125);
    }

    #[test]
    fn median_gamma_identical_points_fail() {
        let a = [1.0, 1.0];
        assert!(matches!(
            median_gamma(&[&a, &a, &a], 0),
            Err(MmkError::Numerical(_))
        ));
        assert!(median_gamma(&[], 0).is_err());
    }

    #[test]
    fn median_gamma_duplication_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cloud: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..6).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let refs: Vec<&[f64]> = cloud.iter().map(Vec::as_slice).collect();
        let g = median_gamma(&refs, 1).unwrap();

        let doubled: Vec<&[f64]> = refs.iter().chain(refs.iter()).copied().collect();
        assert_eq!(median_gamma(&doubled, 1).unwrap(), g);

        let s = 3.5;
        let scaled: Vec<Vec<f64>> = cloud
            .iter()
            .map(|p| p.iter().map(|v| v * s).collect())
            .collect();
        let scaled_refs: Vec<&[f64]> = scaled.iter().map(Vec::as_slice).collect();
        let gs = median_gamma(&scaled_refs, 1).unwrap();
        assert!((gs - g / (s * s)).abs() <= 1e-12 * g);
    }

    #[test]
    fn median_gamma_subsamples_large_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cloud: Vec<Vec<f64>> = (0..3000)
            .map(|_| vec![rng.random(), rng.random()])
            .collect();
        let refs: Vec<&[f64]> = cloud.iter().map(Vec::as_slice).collect();
        let a = median_gamma(&refs, 5).unwrap();
        assert_eq!(a, median_gamma(&refs, 5).unwrap());
        assert!(a.is_finite() && a > 0.0);
    }
}
