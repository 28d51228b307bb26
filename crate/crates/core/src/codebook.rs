//! k-means dictionary shared by bag-of-features quantization and the kernel
//! basis.

use std::collections::HashSet;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dim, MmkError, Result};
use crate::pyramid::VideoDescriptorSet;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub clusters: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once inertia decreases by less than this fraction.
    pub rel_tol: f64,
    /// Upper bound on training points; larger pools are subsampled uniformly.
    pub sample_cap: usize,
}

impl KMeansParams {
    pub fn new(clusters: usize, seed: u64) -> Self {
        Self {
            clusters,
            seed,
            max_iters: 100,
            rel_tol: 1e-4,
            sample_cap: 200_000,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.clusters == 0 || self.max_iters == 0 || self.sample_cap == 0 {
            return Err(MmkError::InvalidConfig(
                "k-means needs clusters, max_iters and sample_cap >= 1".into(),
            ));
        }
        if self.rel_tol.is_nan() || self.rel_tol <= 0.0 {
            return Err(MmkError::InvalidConfig("rel_tol must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainMeta {
    pub seed: u64,
    pub iterations: usize,
    pub inertia: f64,
    /// Inertia after the initial assignment and after every Lloyd update.
    pub inertia_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    centers: Vec<Vec<f64>>,
    dim: usize,
    pub train_meta: TrainMeta,
}

impl Codebook {
    pub fn from_centers(centers: Vec<Vec<f64>>) -> Result<Self> {
        let dim = centers
            .first()
            .map(Vec::len)
            .ok_or_else(|| MmkError::InvalidConfig("codebook needs at least one center".into()))?;
        for c in &centers {
            check_dim(dim, c.len())?;
            if c.iter().any(|v| !v.is_finite()) {
                return Err(MmkError::Format(
                    "codebook center has non-finite entries".into(),
                ));
            }
        }
        Ok(Self {
            centers,
            dim,
            train_meta: TrainMeta::default(),
        })
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn size(&self) -> usize {
        self.centers.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Index of the nearest center; ties go to the lowest index.
    pub fn quantize(&self, x: &[f64]) -> Result<usize> {
        check_dim(self.dim, x.len())?;
        Ok(nearest(&self.centers, x).0)
    }
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centers: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centers.iter().enumerate() {
        let d = squared_distance(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

fn bit_key(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 are the same point
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

/// Borrows every descriptor vector of `videos`, in order.
pub fn pool_descriptors<'a>(
    videos: impl IntoIterator<Item = &'a VideoDescriptorSet>,
) -> Vec<&'a [f64]> {
    videos
        .into_iter()
        .flat_map(|v| v.descriptors().iter().map(|d| d.vec.as_slice()))
        .collect()
}

/// Trains a codebook with k-means++ seeding followed by Lloyd iterations.
pub fn train_codebook(points: &[&[f64]], params: &KMeansParams) -> Result<Codebook> {
    params.validate()?;
    let dim = points
        .first()
        .map(|p| p.len())
        .ok_or_else(|| MmkError::Training("no training descriptors".into()))?;
    for p in points {
        check_dim(dim, p.len())?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(MmkError::Training(
                "training descriptor has non-finite entries".into(),
            ));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let sample: Vec<&[f64]> = if points.len() > params.sample_cap {
        let mut idx = index::sample(&mut rng, points.len(), params.sample_cap).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| points[i]).collect()
    } else {
        points.to_vec()
    };

    let k = params.clusters;
    let distinct = sample
        .iter()
        .map(|p| bit_key(p))
        .collect::<HashSet<_>>()
        .len();
    if distinct < k {
        return Err(MmkError::Training(format!(
            "{k} centers requested but only {distinct} distinct descriptors available"
        )));
    }

    let mut centers = kmeans_plus_plus(&sample, k, &mut rng);
    let mut assignment = assign(&centers, &sample);
    let mut inertia: f64 = assignment.iter().map(|a| a.1).sum();
    let mut history = vec![inertia];
    let mut iterations = 0;

    while iterations < params.max_iters && inertia > 0.0 {
        update_centers(&mut centers, &sample, &assignment, dim);
        assignment = assign(&centers, &sample);
        let next: f64 = assignment.iter().map(|a| a.1).sum();
        iterations += 1;
        history.push(next);
        let converged = (inertia - next) / inertia < params.rel_tol;
        inertia = next;
        if converged {
            break;
        }
    }

    Ok(Codebook {
        centers,
        dim,
        train_meta: TrainMeta {
            seed: params.seed,
            iterations,
            inertia,
            inertia_history: history,
        },
    })
}

fn kmeans_plus_plus(points: &[&[f64]], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let first = rng.random_range(0..points.len());
    let mut centers = vec![points[first].to_vec()];
    let mut d2: Vec<f64> = points
        .par_iter()
        .map(|p| squared_distance(p, &centers[0]))
        .collect();
    while centers.len() < k {
        let mut cumulative = Vec::with_capacity(points.len());
        let mut total = 0.0;
        for &d in &d2 {
            total += d;
            cumulative.push(total);
        }
        let target = rng.random::<f64>() * total;
        let mut pick = cumulative.partition_point(|&c| c <= target);
        if pick >= points.len() || d2[pick] == 0.0 {
            // rounding at the top of the range: fall back to the farthest point
            pick = argmax(&d2);
        }
        let c = points[pick].to_vec();
        d2.par_iter_mut()
            .zip(points.par_iter())
            .for_each(|(d, p)| *d = d.min(squared_distance(p, &c)));
        centers.push(c);
    }
    centers
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn assign(centers: &[Vec<f64>], points: &[&[f64]]) -> Vec<(usize, f64)> {
    points.par_iter().map(|p| nearest(centers, p)).collect()
}

/// Moves each center to the mean of its points, summing in point order.
/// Empty or duplicated centers are reseeded at the points farthest from
/// their assigned centers.
fn update_centers(
    centers: &mut [Vec<f64>],
    points: &[&[f64]],
    assignment: &[(usize, f64)],
    dim: usize,
) {
    let k = centers.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &(c, _)) in points.iter().zip(assignment) {
        counts[c] += 1;
        for (s, v) in sums[c].iter_mut().zip(p.iter()) {
            *s += v;
        }
    }
    let mut orphaned = Vec::new();
    for c in 0..k {
        if counts[c] == 0 {
            orphaned.push(c);
            continue;
        }
        let n = counts[c] as f64;
        centers[c] = sums[c].iter().map(|s| s / n).collect();
    }
    let mut seen = HashSet::new();
    for (c, center) in centers.iter().enumerate().take(k) {
        if !orphaned.contains(&c) && !seen.insert(bit_key(center)) {
            orphaned.push(c);
        }
    }
    if orphaned.is_empty() {
        return;
    }
    orphaned.sort_unstable();
    let mut by_distance: Vec<usize> = (0..points.len()).collect();
    by_distance.sort_by(|&a, &b| assignment[b].1.total_cmp(&assignment[a].1).then(a.cmp(&b)));
    let mut candidates = by_distance.into_iter();
    for c in orphaned {
        for i in candidates.by_ref() {
            if seen.insert(bit_key(points[i])) {
                centers[c] = points[i].to_vec();
                break;
            }
        }
    }
}
