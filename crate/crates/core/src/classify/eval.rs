use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::linear::{train_linear_ovr, SvmParams};
use crate::error::{check_dim, MmkError, Result};

/// Feature vectors with class labels and subject ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledFeatures {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
    pub subjects: Vec<u32>,
}

impl LabeledFeatures {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Random subject splits: `train_subjects` subjects train, the rest test.
    SubjectSplit {
        train_subjects: usize,
        runs: usize,
        seed: u64,
    },
    /// One fold per subject.
    LeaveOneSubjectOut,
}

impl Protocol {
    pub fn name(&self) -> &'static str {
        match self {
            Protocol::SubjectSplit { .. } => "split",
            Protocol::LeaveOneSubjectOut => "loso",
        }
    }
}

/// Train/test sample indices of one run or fold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub protocol: String,
    /// Pooled `trace(confusion) / total`.
    pub accuracy: f64,
    pub labels: Vec<u32>,
    /// `confusion[true][predicted]`, pooled over runs.
    pub confusion: Vec<Vec<u64>>,
    pub run_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Sample standard deviation of `run_accuracies` (0 for a single run).
    pub std_accuracy: f64,
}

impl EvalReport {
    pub fn total(&self) -> u64 {
        self.confusion.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.confusion.len())
            .map(|i| self.confusion[i][i])
            .sum()
    }
}

fn sorted_unique(v: &[u32]) -> Vec<u32> {
    let mut u = v.to_vec();
    u.sort_unstable();
    u.dedup();
    u
}

/// Folds for `protocol` over samples tagged with `subjects`.
pub fn make_folds(subjects: &[u32], protocol: Protocol) -> Result<Vec<Fold>> {
    let unique = sorted_unique(subjects);
    let by_subjects = |train: &[u32]| Fold {
        train: (0..subjects.len())
            .filter(|&i| train.contains(&subjects[i]))
            .collect(),
        test: (0..subjects.len())
            .filter(|&i| !train.contains(&subjects[i]))
            .collect(),
    };
    match protocol {
        Protocol::SubjectSplit {
            train_subjects,
            runs,
            seed,
        } => {
            if train_subjects == 0 || unique.len() < train_subjects + 1 {
                return Err(MmkError::Evaluation(format!(
                    "subject split with {train_subjects} training subjects needs at least {} subjects, found {}",
                    train_subjects + 1,
                    unique.len()
                )));
            }
            if runs == 0 {
                return Err(MmkError::Evaluation("at least one run is required".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..runs)
                .map(|_| {
                    let mut order = unique.clone();
                    order.shuffle(&mut rng);
                    by_subjects(&order[..train_subjects])
                })
                .collect())
        }
        Protocol::LeaveOneSubjectOut => {
            if unique.len() < 2 {
                return Err(MmkError::Evaluation(format!(
                    "leave-one-subject-out needs at least 2 subjects, found {}",
                    unique.len()
                )));
            }
            Ok(unique
                .iter()
                .map(|&held| {
                    let train: Vec<u32> = unique.iter().copied().filter(|&s| s != held).collect();
                    by_subjects(&train)
                })
                .collect())
        }
    }
}

/// Runs `predict_fold` on every fold (in parallel) and pools the predictions
/// into a report. `predict_fold` returns one predicted label per test index.
pub fn run_folds<F>(
    labels: &[u32],
    folds: &[Fold],
    protocol: &str,
    predict_fold: F,
) -> Result<EvalReport>
where
    F: Fn(&Fold) -> Result<Vec<u32>> + Sync,
{
    let classes = sorted_unique(labels);
    let index_of = |l: u32| classes.binary_search(&l).ok();
    let predictions = folds
        .par_iter()
        .map(&predict_fold)
        .collect::<Result<Vec<_>>>()?;

    let mut confusion = vec![vec![0u64; classes.len()]; classes.len()];
    let mut run_accuracies = Vec::with_capacity(folds.len());
    for (fold, pred) in folds.iter().zip(&predictions) {
        check_dim(fold.test.len(), pred.len())?;
        let mut correct = 0usize;
        for (&i, &p) in fold.test.iter().zip(pred) {
            let t = index_of(labels[i]).expect("label from dataset");
            let p = index_of(p).ok_or_else(|| {
                MmkError::Evaluation(format!("predicted label {p} is not a dataset class"))
            })?;
            confusion[t][p] += 1;
            correct += usize::from(t == p);
        }
        if !fold.test.is_empty() {
            run_accuracies.push(correct as f64 / fold.test.len() as f64);
        }
    }
    let total: u64 = confusion.iter().flatten().sum();
    let trace: u64 = (0..classes.len()).map(|i| confusion[i][i]).sum();
    let accuracy = if total == 0 {
        0.0
    } else {
        trace as f64 / total as f64
    };
    let n = run_accuracies.len() as f64;
    let mean_accuracy = if n > 0.0 {
        run_accuracies.iter().sum::<f64>() / n
    } else {
        0.0
    };
    let std_accuracy = if n > 1.0 {
        (run_accuracies
            .iter()
            .map(|a| (a - mean_accuracy).powi(2))
            .sum::<f64>()
            / (n - 1.0))
            .sqrt()
    } else {
        0.0
    };
    Ok(EvalReport {
        protocol: protocol.to_string(),
        accuracy,
        labels: classes,
        confusion,
        run_accuracies,
        mean_accuracy,
        std_accuracy,
    })
}

fn evaluate(data: &LabeledFeatures, protocol: Protocol, params: &SvmParams) -> Result<EvalReport> {
    check_dim(data.labels.len(), data.features.len())?;
    check_dim(data.labels.len(), data.subjects.len())?;
    let folds = make_folds(&data.subjects, protocol)?;
    run_folds(&data.labels, &folds, protocol.name(), |fold| {
        let x: Vec<&[f64]> = fold
            .train
            .iter()
            .map(|&i| data.features[i].as_slice())
            .collect();
        let y: Vec<u32> = fold.train.iter().map(|&i| data.labels[i]).collect();
        let model = train_linear_ovr(&x, &y, params)?;
        fold.test
            .iter()
            .map(|&i| model.predict(&data.features[i]).map(|p| p.0))
            .collect()
    })
}

pub fn evaluate_subject_split(
    data: &LabeledFeatures,
    train_subjects: usize,
    runs: usize,
    seed: u64,
    params: &SvmParams,
) -> Result<EvalReport> {
    evaluate(
        data,
        Protocol::SubjectSplit {
            train_subjects,
            runs,
            seed,
        },
        params,
    )
}

pub fn evaluate_loso(data: &LabeledFeatures, params: &SvmParams) -> Result<EvalReport> {
    evaluate(data, Protocol::LeaveOneSubjectOut, params)
}
