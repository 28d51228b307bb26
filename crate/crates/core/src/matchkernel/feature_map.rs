use nalgebra::DVector;
use rayon::prelude::*;

use super::basis::KernelBasis;
use crate::error::{check_dim, Result};
use crate::pyramid::{pyramid_voxel_count, voxel_index, PyramidConfig, VideoDescriptorSet};

/// Descriptors whose `k_Z` vectors are computed together before being
/// accumulated in input order.
const CHUNK: usize = 1024;

/// Concatenated, level-weighted voxel means of `phi`, in pyramid order.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoFeatureMap {
    pub values: Vec<f64>,
    pub levels: usize,
    pub basis_size: usize,
    pub weights: Vec<f64>,
}

impl VideoFeatureMap {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `D * [L(L+1)/2]^2`.
    pub fn expected_dim(basis_size: usize, levels: usize) -> usize {
        basis_size * pyramid_voxel_count(levels)
    }
}

/// `phi(x) = G k_Z(x)`.
pub fn phi(x: &[f64], basis: &KernelBasis) -> Result<Vec<f64>> {
    let k = basis.kernel_vector(x)?;
    Ok((basis.whitening() * k).data.into())
}

/// Mean of `phi` over a group of descriptors; zero for an empty group.
pub fn voxel_feature(group: &[&[f64]], basis: &KernelBasis) -> Result<Vec<f64>> {
    for x in group {
        check_dim(basis.dim(), x.len())?;
    }
    if group.is_empty() {
        return Ok(vec![0.0; basis.size()]);
    }
    let mut sum = DVector::zeros(basis.size());
    for x in group {
        sum += basis.kernel_vector_unchecked(x);
    }
    sum /= group.len() as f64;
    Ok((basis.whitening() * sum).data.into())
}

/// Pyramid feature map of one video.
///
/// `k_Z(x)` is summed per voxel first, so `G` is applied once per voxel
/// rather than once per descriptor.
pub fn video_feature_map(
    video: &VideoDescriptorSet,
    basis: &KernelBasis,
    pcfg: &PyramidConfig,
) -> Result<VideoFeatureMap> {
    check_dim(basis.dim(), video.descriptor_dim())?;
    let d = basis.size();
    let levels = pcfg.levels();
    let voxels = pyramid_voxel_count(levels);
    // offset of level i's first voxel
    let offsets: Vec<usize> = (1..=levels).map(|i| pyramid_voxel_count(i - 1)).collect();

    let mut sums = vec![DVector::<f64>::zeros(d); voxels];
    let mut counts = vec![0usize; voxels];
    for chunk in video.descriptors().chunks(CHUNK) {
        let kz: Vec<DVector<f64>> = chunk
            .par_iter()
            .map(|desc| basis.kernel_vector_unchecked(&desc.vec))
            .collect();
        for (desc, k) in chunk.iter().zip(&kz) {
            for (li, &offset) in offsets.iter().enumerate() {
                let slot = offset + voxel_index(&desc.loc, li + 1);
                sums[slot] += k;
                counts[slot] += 1;
            }
        }
    }

    let mut values = vec![0.0; d * voxels];
    let g = basis.whitening();
    for (li, &offset) in offsets.iter().enumerate() {
        let level = li + 1;
        let w = pcfg.weight(level);
        for slot in offset..offset + level * level * level {
            if counts[slot] == 0 {
                continue;
            }
            let scale = w / counts[slot] as f64;
            let block = g * &sums[slot];
            for (out, v) in values[slot * d..(slot + 1) * d]
                .iter_mut()
                .zip(block.iter())
            {
                *out = scale * v;
            }
        }
    }
    Ok(VideoFeatureMap {
        values,
        levels,
        basis_size: d,
        weights: pcfg.weights().to_vec(),
    })
}

/// Feature maps of many videos, computed in parallel and returned in input
/// order.
pub fn video_feature_maps(
    videos: &[VideoDescriptorSet],
    basis: &KernelBasis,
    pcfg: &PyramidConfig,
) -> Result<Vec<VideoFeatureMap>> {
    videos
        .par_iter()
        .map(|v| video_feature_map(v, basis, pcfg))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codebook::Codebook;
    use crate::pyramid::{LocatedDescriptor, Location, VideoDims, VideoMeta};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn basis(d: usize, dim: usize, seed: u64, lambda: f64) -> KernelBasis {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cb = Codebook::from_centers(
            (0..d)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
        )
        .unwrap();
        KernelBasis::with_lambda(cb, 0.8, lambda).unwrap()
    }

    fn random_video(m: usize, dim: usize, rng: &mut ChaCha8Rng) -> VideoDescriptorSet {
        let descriptors = (0..m)
            .map(|_| LocatedDescriptor {
                loc: Location::new(rng.random(), rng.random(), rng.random()).unwrap(),
                vec: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            })
            .collect();
        VideoDescriptorSet::new(
            VideoDims::new(32, 32, 16).unwrap(),
            dim,
            descriptors,
            VideoMeta::default(),
        )
        .unwrap()
    }

    #[test]
    fn phi_with_single_center() {
        let cb = Codebook::from_centers(vec![vec![1.0, 2.0]]).unwrap();
        let b = KernelBasis::with_lambda(cb, 0.5, 0.0).unwrap();
        let p = phi(&[0.0, 0.0], &b).unwrap();
        assert_eq!(p.len(), 1);
        assert!((p[0].abs() - (-0.5f64 * 5.0).exp()).abs() < 1e-15);
    }

    #[test]
    fn phi_dot_matches_linear_solve() {
        let b = basis(10, 4, 3, 1e-6);
        let a = b.regularized_gram();
        let lu = a.lu();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
            let px = phi(&x, &b).unwrap();
            let py = phi(&y, &b).unwrap();
            let dot: f64 = px.iter().zip(&py).map(|(a, b)| a * b).sum();
            let oracle = b
                .kernel_vector(&x)
                .unwrap()
                .dot(&lu.solve(&b.kernel_vector(&y).unwrap()).unwrap());
            assert!((dot - oracle).abs() <= 1e-8, "{dot} vs {oracle}");
        }
        // Nystrom self-similarity at a basis point
        let z = b.codebook().centers()[2].clone();
        let pz = phi(&z, &b).unwrap();
        let self_sim: f64 = pz.iter().map(|v| v * v).sum();
        let kz = b.kernel_vector(&z).unwrap();
        let oracle = kz.dot(&lu.solve(&kz).unwrap());
        assert!((self_sim - oracle).abs() <= 1e-8);
        assert!(phi(&[0.0], &b).is_err());
    }

    #[test]
    fn voxel_feature_means() {
        let b = basis(6, 3, 5, 1e-8);
        assert_eq!(voxel_feature(&[], &b).unwrap(), vec![0.0; 6]);
        let x = [0.1, 0.2, 0.3];
        let y = [-0.4, 0.0, 0.9];
        let px = phi(&x, &b).unwrap();
        let py = phi(&y, &b).unwrap();
        let single = voxel_feature(&[&x], &b).unwrap();
        for (a, e) in single.iter().zip(&px) {
            assert!((a - e).abs() < 1e-12);
        }
        let pair = voxel_feature(&[&x, &y], &b).unwrap();
        for ((a, p), q) in pair.iter().zip(&px).zip(&py) {
            assert!((a - 0.5 * (p + q)).abs() < 1e-12);
        }
    }

    #[test]
    fn dimension_d10_l3_is_360() {
        let b = basis(10, 2, 1, 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = random_video(30, 2, &mut rng);
        let f = video_feature_map(&v, &b, &PyramidConfig::dyadic(3).unwrap()).unwrap();
        assert_eq!(f.dim(), 360);
        assert_eq!(VideoFeatureMap::expected_dim(10, 3), 360);
    }

    #[test]
    fn single_level_is_mean_phi() {
        let b = basis(7, 3, 2, 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = random_video(25, 3, &mut rng);
        let f = video_feature_map(&v, &b, &PyramidConfig::uniform(1).unwrap()).unwrap();
        let group: Vec<&[f64]> = v.descriptors().iter().map(|d| d.vec.as_slice()).collect();
        let mut mean = vec![0.0; 7];
        for x in &group {
            for (m, p) in mean.iter_mut().zip(phi(x, &b).unwrap()) {
                *m += p / group.len() as f64;
            }
        }
        for (a, e) in f.values.iter().zip(&mean) {
            assert!((a - e).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_video_maps_to_zero() {
        let b = basis(4, 2, 2, 1e-8);
        let v = VideoDescriptorSet::new(
            VideoDims::new(1, 1, 1).unwrap(),
            2,
            vec![],
            VideoMeta::default(),
        )
        .unwrap();
        let f = video_feature_map(&v, &b, &PyramidConfig::dyadic(2).unwrap()).unwrap();
        assert_eq!(f.values, vec![0.0; 36]);
    }

    #[test]
    fn permutation_within_video_is_invisible() {
        let b = basis(8, 3, 4, 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let v = random_video(40, 3, &mut rng);
        let mut shuffled = v.descriptors().to_vec();
        shuffled.reverse();
        shuffled.swap(3, 17);
        let w = VideoDescriptorSet::new(v.dims(), 3, shuffled, VideoMeta::default()).unwrap();
        let pcfg = PyramidConfig::dyadic(3).unwrap();
        let a = video_feature_map(&v, &b, &pcfg).unwrap();
        let c = video_feature_map(&w, &b, &pcfg).unwrap();
        for (x, y) in a.values.iter().zip(&c.values) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let b = basis(4, 2, 2, 1e-8);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let v = random_video(5, 3, &mut rng);
        assert!(video_feature_map(&v, &b, &PyramidConfig::uniform(1).unwrap()).is_err());
    }
}
