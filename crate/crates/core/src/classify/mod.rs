//! Linear classification of video feature maps and subject-wise evaluation.

mod eval;
mod linear;

pub use eval::{
    evaluate_loso, evaluate_subject_split, make_folds, run_folds, EvalReport, Fold,
    LabeledFeatures, Protocol,
};
pub use linear::{train_linear_ovr, train_linear_ovr_traced, BinaryTrace, LinearModel, SvmParams};
