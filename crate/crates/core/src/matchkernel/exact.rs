use nalgebra::DVector;

use super::basis::KernelBasis;
use crate::codebook::Codebook;
use crate::error::{check_dim, MmkError, Result};
use crate::pyramid::{partition, PyramidConfig, VideoDescriptorSet};

/// Weighted pyramid match sum with an arbitrary pairwise base kernel over
/// descriptor indices:
///
/// `sum_i w_i^2 sum_j (sum_{a in X_ij, b in Y_ij} pair(a, b)) / (|X_ij| |Y_ij|)`.
///
/// Voxels that are empty on either side contribute nothing.
pub fn pyramid_match_sum(
    x: &VideoDescriptorSet,
    y: &VideoDescriptorSet,
    pcfg: &PyramidConfig,
    pair: impl Fn(usize, usize) -> f64,
) -> f64 {
    let px = partition(x, pcfg.levels());
    let py = partition(y, pcfg.levels());
    let mut total = 0.0;
    for level in 1..=pcfg.levels() {
        let w = pcfg.weight(level);
        for (gx, gy) in px.level(level).iter().zip(py.level(level)) {
            if gx.is_empty() || gy.is_empty() {
                continue;
            }
            let mut s = 0.0;
            for &a in gx {
                for &b in gy {
                    s += pair(a, b);
                }
            }
            total += w * w * (s / (gx.len() as f64 * gy.len() as f64));
        }
    }
    total
}

/// The multiresolution match kernel by direct double summation, with
/// `k(x, y) = k_Z(x)^T (K_ZZ + lambda I)^-1 k_Z(y)` obtained from a
/// linear solve rather than the whitening matrix.
pub fn mmk_exact(
    x: &VideoDescriptorSet,
    y: &VideoDescriptorSet,
    basis: &KernelBasis,
    pcfg: &PyramidConfig,
) -> Result<f64> {
    check_dim(basis.dim(), x.descriptor_dim())?;
    check_dim(basis.dim(), y.descriptor_dim())?;
    let a = basis.regularized_gram();
    let solver = a
        .clone()
        .cholesky()
        .map(Solver::Cholesky)
        .or_else(|| Some(Solver::Lu(a.lu())))
        .unwrap();
    let kx: Vec<DVector<f64>> = x
        .descriptors()
        .iter()
        .map(|d| basis.kernel_vector_unchecked(&d.vec))
        .collect();
    let sy = y
        .descriptors()
        .iter()
        .map(|d| solver.solve(&basis.kernel_vector_unchecked(&d.vec)))
        .collect::<Result<Vec<_>>>()?;
    Ok(pyramid_match_sum(x, y, pcfg, |i, j| kx[i].dot(&sy[j])))
}

enum Solver {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Lu(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
}

impl Solver {
    fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        match self {
            Solver::Cholesky(c) => Ok(c.solve(b)),
            Solver::Lu(lu) => lu
                .solve(b)
                .ok_or_else(|| MmkError::Numerical("regularized Gram matrix is singular".into())),
        }
    }
}

/// Pyramid kernel with the quantization indicator `delta` as base kernel.
pub fn bof_pyramid_kernel(
    x: &VideoDescriptorSet,
    y: &VideoDescriptorSet,
    codebook: &Codebook,
    pcfg: &PyramidConfig,
) -> Result<f64> {
    let quantize_all = |v: &VideoDescriptorSet| {
        v.descriptors()
            .iter()
            .map(|d| codebook.quantize(&d.vec))
            .collect::<Result<Vec<_>>>()
    };
    let qx = quantize_all(x)?;
    let qy = quantize_all(y)?;
    Ok(pyramid_match_sum(x, y, pcfg, |i, j| {
        if qx[i] == qy[j] {
            1.0
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matchkernel::{phi, video_feature_map};
    use crate::pyramid::{LocatedDescriptor, Location, VideoDims, VideoMeta};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn video(points: Vec<((f64, f64, f64), Vec<f64>)>) -> VideoDescriptorSet {
        let dim = points.first().map_or(2, |p| p.1.len());
        let descriptors = points
            .into_iter()
            .map(|((u, v, w), vec)| LocatedDescriptor {
                loc: Location::new(u, v, w).unwrap(),
                vec,
            })
            .collect();
        VideoDescriptorSet::new(
            VideoDims::new(8, 8, 8).unwrap(),
            dim,
            descriptors,
            VideoMeta::default(),
        )
        .unwrap()
    }

    fn basis() -> KernelBasis {
        let cb =
            Codebook::from_centers(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        KernelBasis::new(cb, 1.0).unwrap()
    }

    #[test]
    fn single_descriptor_videos() {
        let b = basis();
        let x = video(vec![((0.1, 0.2, 0.3), vec![0.3, 0.1])]);
        let y = video(vec![((0.9, 0.5, 0.5), vec![0.7, 0.9])]);
        let pcfg = PyramidConfig::new(1, vec![3.0]).unwrap();
        let k = mmk_exact(&x, &y, &b, &pcfg).unwrap();
        let px = phi(&[0.3, 0.1], &b).unwrap();
        let py = phi(&[0.7, 0.9], &b).unwrap();
        let dot: f64 = px.iter().zip(&py).map(|(a, b)| a * b).sum();
        assert!((k - 9.0 * dot).abs() < 1e-9);
    }

    #[test]
    fn self_kernel_nonnegative_and_matches_feature_map() {
        let b = basis();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pcfg = PyramidConfig::dyadic(3).unwrap();
        for _ in 0..10 {
            let mk = |rng: &mut ChaCha8Rng| {
                video(
                    (0..rng.random_range(0..30))
                        .map(|_| {
                            (
                                (rng.random(), rng.random(), rng.random()),
                                vec![rng.random(), rng.random()],
                            )
                        })
                        .collect(),
                )
            };
            let x = mk(&mut rng);
            let y = mk(&mut rng);
            assert!(mmk_exact(&x, &x, &b, &pcfg).unwrap() >= 0.0);
            let exact = mmk_exact(&x, &y, &b, &pcfg).unwrap();
            let fx = video_feature_map(&x, &b, &pcfg).unwrap();
            let fy = video_feature_map(&y, &b, &pcfg).unwrap();
            assert!((fx.dot(&fy) - exact).abs() <= 1e-6 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn order_of_locations_matters_above_level_one() {
        // same descriptor multiset, opposite spatial arrangement
        let x = video(vec![
            ((0.1, 0.5, 0.1), vec![0.0, 0.0]),
            ((0.9, 0.5, 0.9), vec![1.0, 0.0]),
        ]);
        let y = video(vec![
            ((0.9, 0.5, 0.1), vec![0.0, 0.0]),
            ((0.1, 0.5, 0.9), vec![1.0, 0.0]),
        ]);
        let b = basis();
        let one = PyramidConfig::uniform(1).unwrap();
        let two = PyramidConfig::uniform(2).unwrap();
        let fx1 = video_feature_map(&x, &b, &one).unwrap();
        let fy1 = video_feature_map(&y, &b, &one).unwrap();
        assert_eq!(fx1, fy1);
        let fx2 = video_feature_map(&x, &b, &two).unwrap();
        let fy2 = video_feature_map(&y, &b, &two).unwrap();
        assert_ne!(fx2.values, fy2.values);
    }

    #[test]
    fn dimension_checks() {
        let b = basis();
        let x = video(vec![((0.1, 0.1, 0.1), vec![0.0, 0.0, 0.0])]);
        assert!(mmk_exact(&x, &x, &b, &PyramidConfig::uniform(1).unwrap()).is_err());
    }
}
