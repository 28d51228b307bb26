use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{check_dim, MmkError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    /// Loss/regularization trade-off.
    pub c: f64,
    /// Value of the constant feature appended to every sample; its weight is
    /// the class bias. 0 disables the bias.
    pub bias: f64,
    pub max_epochs: usize,
    /// Stop once the projected-gradient spread of an epoch falls below this.
    pub tol: f64,
    pub seed: u64,
    /// Scale every feature vector to unit L2 norm before training and
    /// prediction.
    pub normalize: bool,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            bias: 1.0,
            max_epochs: 1000,
            tol: 1e-5,
            seed: 0,
            normalize: false,
        }
    }
}

impl SvmParams {
    fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(MmkError::Classifier(format!(
                "C must be positive, got {}",
                self.c
            )));
        }
        if !(self.bias >= 0.0 && self.tol > 0.0) || self.max_epochs == 0 {
            return Err(MmkError::Classifier("invalid solver parameters".into()));
        }
        Ok(())
    }
}

/// One-vs-rest L2-regularized squared-hinge linear classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub labels: Vec<u32>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub params: SvmParams,
}

/// Per-class solver trace.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryTrace {
    pub epochs: usize,
    /// Dual objective after every epoch (non-increasing).
    pub dual_objective: Vec<f64>,
}

impl LinearModel {
    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Per-class scores `w_c^T f + b_c`.
    pub fn scores(&self, feature: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), feature.len())?;
        let scale = if self.params.normalize {
            inv_norm(feature)
        } else {
            1.0
        };
        Ok(self
            .weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| scale * dot(w, feature) + b)
            .collect())
    }

    /// Highest-scoring label; ties go to the lowest class index.
    pub fn predict(&self, feature: &[f64]) -> Result<(u32, Vec<f64>)> {
        let scores = self.scores(feature)?;
        Ok((self.labels[argmax(&scores)], scores))
    }
}

pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inv_norm(x: &[f64]) -> f64 {
    let n = dot(x, x).sqrt();
    if n > 0.0 {
        1.0 / n
    } else {
        1.0
    }
}

/// Trains one binary classifier per distinct label (sorted ascending).
pub fn train_linear_ovr(
    features: &[&[f64]],
    labels: &[u32],
    params: &SvmParams,
) -> Result<LinearModel> {
    train_linear_ovr_traced(features, labels, params).map(|(m, _)| m)
}

pub fn train_linear_ovr_traced(
    features: &[&[f64]],
    labels: &[u32],
    params: &SvmParams,
) -> Result<(LinearModel, Vec<BinaryTrace>)> {
    params.validate()?;
    check_dim(features.len(), labels.len())?;
    let dim = features
        .first()
        .map(|f| f.len())
        .ok_or_else(|| MmkError::Classifier("no training samples".into()))?;
    for f in features {
        check_dim(dim, f.len())?;
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(MmkError::Classifier(format!(
            "need at least two classes, got {}",
            classes.len()
        )));
    }
    let scales: Vec<f64> = features
        .iter()
        .map(|f| if params.normalize { inv_norm(f) } else { 1.0 })
        .collect();

    let fitted: Vec<(Vec<f64>, f64, BinaryTrace)> = classes
        .par_iter()
        .enumerate()
        .map(|(ci, &class)| {
            let y: Vec<f64> = labels
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            let seed = params.seed.wrapping_add(ci as u64);
            dual_cd(features, &scales, &y, params, seed)
        })
        .collect();

    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    let mut traces = Vec::with_capacity(classes.len());
    for (w, b, t) in fitted {
        weights.push(w);
        biases.push(b);
        traces.push(t);
    }
    Ok((
        LinearModel {
            labels: classes,
            weights,
            biases,
            params: params.clone(),
        },
        traces,
    ))
}

/// Dual coordinate descent for
/// `min_w 1/2 |w|^2 + C sum_i max(0, 1 - y_i w^T x_i)^2`
/// where `x_i` carries the appended bias feature.
fn dual_cd(
    features: &[&[f64]],
    scales: &[f64],
    y: &[f64],
    params: &SvmParams,
    seed: u64,
) -> (Vec<f64>, f64, BinaryTrace) {
    let n = features.len();
    let dim = features[0].len();
    let diag = 0.5 / params.c;
    let b2 = params.bias * params.bias;
    let qii: Vec<f64> = features
        .iter()
        .zip(scales)
        .map(|(f, s)| s * s * dot(f, f) + b2 + diag)
        .collect();
    let mut alpha = vec![0.0; n];
    let mut w = vec![0.0; dim];
    let mut wb = 0.0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = Vec::new();
    let mut epochs = 0;

    while epochs < params.max_epochs {
        order.shuffle(&mut rng);
        let mut pg_max = f64::NEG_INFINITY;
        let mut pg_min = f64::INFINITY;
        for &i in &order {
            let xi = features[i];
            let s = scales[i];
            let margin = s * dot(&w, xi) + wb * params.bias;
            let g = y[i] * margin - 1.0 + diag * alpha[i];
            let pg = if alpha[i] == 0.0 { g.min(0.0) } else { g };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / qii[i]).max(0.0);
                let step = (alpha[i] - old) * y[i];
                for (wj, xj) in w.iter_mut().zip(xi.iter()) {
                    *wj += step * s * xj;
                }
                wb += step * params.bias;
            }
        }
        epochs += 1;
        history.push(
            0.5 * (dot(&w, &w) + wb * wb) + 0.5 * diag * dot(&alpha, &alpha)
                - alpha.iter().sum::<f64>(),
        );
        if pg_max - pg_min <= params.tol {
            break;
        }
    }
    (
        w,
        wb * params.bias,
        BinaryTrace {
            epochs,
            dual_objective: history,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(Vec::as_slice).collect()
    }

    fn blobs(seed: u64) -> (Vec<Vec<f64>>, Vec<u32>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let centers = [[0.0, 0.0, 4.0], [5.0, 0.0, 0.0], [0.0, 5.0, -2.0]];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..90 {
            let c = i % 3;
            x.push(
                centers[c]
                    .iter()
                    .map(|v| v + rng.random_range(-0.5..0.5))
                    .collect(),
            );
            y.push(c as u32 * 10);
        }
        (x, y)
    }

    #[test]
    fn separable_clusters_are_fit_exactly() {
        let (x, y) = blobs(1);
        let model = train_linear_ovr(&refs(&x), &y, &SvmParams::default()).unwrap();
        assert_eq!(model.labels, vec![0, 10, 20]);
        for (f, &l) in x.iter().zip(&y) {
            assert_eq!(model.predict(f).unwrap().0, l);
        }
    }

    #[test]
    fn dual_objective_never_increases() {
        let (x, y) = blobs(2);
        let params = SvmParams {
            c: 10.0,
            tol: 1e-9,
            max_epochs: 200,
            ..SvmParams::default()
        };
        let (_, traces) = train_linear_ovr_traced(&refs(&x), &y, &params).unwrap();
        for t in traces {
            assert!(t.dual_objective.len() > 1);
            assert!(t
                .dual_objective
                .windows(2)
                .all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0)));
        }
    }

    #[test]
    fn xor_is_not_linearly_separable() {
        // every line through the plane misclassifies at least one XOR corner,
        // so training accuracy cannot exceed 3/4
        let x = vec![
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![1.0, 0.0],
        ];
        let y = vec![0, 0, 1, 1];
        let model = train_linear_ovr(&refs(&x), &y, &SvmParams::default()).unwrap();
        let correct = x
            .iter()
            .zip(&y)
            .filter(|(f, &l)| model.predict(f).unwrap().0 == l)
            .count();
        assert!(correct <= 3);
    }

    #[test]
    fn prediction_tie_rule_and_invariances() {
        let model = LinearModel {
            labels: vec![3, 5, 9],
            weights: vec![vec![0.0, 0.0]; 3],
            biases: vec![0.0; 3],
            params: SvmParams::default(),
        };
        assert_eq!(model.predict(&[0.0, 0.0]).unwrap().0, 3);
        assert!(model.predict(&[0.0]).is_err());

        let (x, y) = blobs(3);
        let mut m = train_linear_ovr(&refs(&x), &y, &SvmParams::default()).unwrap();
        let before: Vec<u32> = x.iter().map(|f| m.predict(f).unwrap().0).collect();
        for b in m.biases.iter_mut() {
            *b += 7.5;
        }
        let shifted: Vec<u32> = x.iter().map(|f| m.predict(f).unwrap().0).collect();
        assert_eq!(before, shifted);
        for (w, b) in m.weights.iter_mut().zip(m.biases.iter_mut()) {
            w.iter_mut().for_each(|v| *v *= 3.0);
            *b *= 3.0;
        }
        let scaled: Vec<u32> = x.iter().map(|f| m.predict(f).unwrap().0).collect();
        assert_eq!(before, scaled);
    }

    #[test]
    fn errors() {
        let x = vec![vec![1.0], vec![2.0]];
        assert!(train_linear_ovr(&refs(&x), &[1, 1], &SvmParams::default()).is_err());
        let ragged = vec![vec![1.0], vec![2.0, 3.0]];
        assert!(train_linear_ovr(&refs(&ragged), &[0, 1], &SvmParams::default()).is_err());
        let bad = SvmParams {
            c: 0.0,
            ..SvmParams::default()
        };
        assert!(train_linear_ovr(&refs(&x), &[0, 1], &bad).is_err());
    }

    #[test]
    fn normalization_ignores_feature_scale() {
        let (x, y) = blobs(4);
        let params = SvmParams {
            normalize: true,
            ..SvmParams::default()
        };
        let m = train_linear_ovr(&refs(&x), &y, &params).unwrap();
        for f in &x {
            let big: Vec<f64> = f.iter().map(|v| v * 100.0).collect();
            assert_eq!(m.predict(f).unwrap().0, m.predict(&big).unwrap().0);
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let (x, y) = blobs(5);
        let a = train_linear_ovr(&refs(&x), &y, &SvmParams::default()).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let b = pool.install(|| train_linear_ovr(&refs(&x), &y, &SvmParams::default()).unwrap());
        assert_eq!(a, b);
    }
}
