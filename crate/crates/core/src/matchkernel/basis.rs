use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::rbf_unchecked;
use crate::codebook::Codebook;
use crate::error::{check_dim, MmkError, Result};

/// Codebook centers `Z`, their RBF Gram matrix `K_ZZ` and a whitening matrix
/// `G` with `G^T G = (K_ZZ + lambda I)^-1`.
#[derive(Debug, Clone)]
pub struct KernelBasis {
    codebook: Codebook,
    gamma: f64,
    lambda: f64,
    gram: DMatrix<f64>,
    whitening: DMatrix<f64>,
}

impl KernelBasis {
    /// Builds the basis with the default ridge `1e-8 * trace(K_ZZ) / D`.
    pub fn new(codebook: Codebook, gamma: f64) -> Result<Self> {
        // RBF Gram matrices have a unit diagonal, so trace / D = 1.
        Self::with_lambda(codebook, gamma, 1e-8)
    }

    pub fn with_lambda(codebook: Codebook, gamma: f64, lambda: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(MmkError::InvalidConfig(format!(
                "gamma must be positive, got {gamma}"
            )));
        }
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(MmkError::InvalidConfig(format!(
                "lambda must be >= 0, got {lambda}"
            )));
        }
        let centers = codebook.centers();
        let d = centers.len();
        let gram = DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                1.0
            } else {
                rbf_unchecked(&centers[i], &centers[j], gamma)
            }
        });
        let whitening = inverse_sqrt(&gram, lambda)?;
        Ok(Self {
            codebook,
            gamma,
            lambda,
            gram,
            whitening,
        })
    }

    pub fn codebook(&self) -> &Codebook {
        &self.codebook
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Number of basis points `D`.
    pub fn size(&self) -> usize {
        self.codebook.size()
    }

    /// Descriptor dimension `d`.
    pub fn dim(&self) -> usize {
        self.codebook.dim()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `K_ZZ + lambda I`.
    pub fn regularized_gram(&self) -> DMatrix<f64> {
        &self.gram + DMatrix::identity(self.size(), self.size()) * self.lambda
    }

    pub fn whitening(&self) -> &DMatrix<f64> {
        &self.whitening
    }

    /// `k_Z(x)`: base-kernel similarities of `x` to every basis point.
    pub fn kernel_vector(&self, x: &[f64]) -> Result<DVector<f64>> {
        check_dim(self.dim(), x.len())?;
        Ok(self.kernel_vector_unchecked(x))
    }

    pub(crate) fn kernel_vector_unchecked(&self, x: &[f64]) -> DVector<f64> {
        DVector::from_iterator(
            self.size(),
            self.codebook
                .centers()
                .iter()
                .map(|z| rbf_unchecked(x, z, self.gamma)),
        )
    }

    /// `G^T G (K_ZZ + lambda I) - I`.
    pub fn whitening_error(&self) -> DMatrix<f64> {
        let n = self.size();
        self.whitening.transpose() * &self.whitening * self.regularized_gram()
            - DMatrix::identity(n, n)
    }

    /// Frobenius norm of [`Self::whitening_error`].
    pub fn whitening_residual(&self) -> f64 {
        self.whitening_error().norm()
    }
}

/// `Lambda^-1/2 U^T` from the eigendecomposition of `gram + lambda I`, with
/// eigenvalues floored at `max(lambda, D * eps * lambda_max)`.
fn inverse_sqrt(gram: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let n = gram.nrows();
    let shifted = gram + DMatrix::identity(n, n) * lambda;
    if shifted.iter().any(|v| !v.is_finite()) {
        return Err(MmkError::Numerical(
            "Gram matrix has non-finite entries".into(),
        ));
    }
    let eig = SymmetricEigen::try_new(shifted, f64::EPSILON, 0)
        .ok_or_else(|| MmkError::Numerical("eigendecomposition did not converge".into()))?;
    let largest = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    let floor = lambda.max(n as f64 * f64::EPSILON * largest);
    if floor.is_nan() || floor <= 0.0 {
        return Err(MmkError::Numerical(
            "Gram matrix has no positive eigenvalue".into(),
        ));
    }
    let mut g = eig.eigenvectors.transpose();
    for (mut row, &ev) in g.row_iter_mut().zip(eig.eigenvalues.iter()) {
        row /= ev.max(floor).sqrt();
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(MmkError::Numerical(
            "whitening matrix has non-finite entries".into(),
        ));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_codebook(d: usize, dim: usize, seed: u64) -> Codebook {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Codebook::from_centers(
            (0..d)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_center_is_identity() {
        let cb = Codebook::from_centers(vec![vec![0.5, 0.5]]).unwrap();
        let b = KernelBasis::with_lambda(cb, 3.0, 0.0).unwrap();
        assert_eq!(b.gram()[(0, 0)], 1.0);
        assert!((b.whitening()[(0, 0)].abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn far_apart_centers_whiten_to_orthogonal() {
        let cb =
            Codebook::from_centers((0..5).map(|i| vec![i as f64, -(i as f64)]).collect()).unwrap();
        let b = KernelBasis::with_lambda(cb, 1e6, 0.0).unwrap();
        let eye = DMatrix::<f64>::identity(5, 5);
        assert!((b.gram() - &eye).norm() < 1e-12);
        let gtg = b.whitening().transpose() * b.whitening();
        assert!((gtg - eye).norm() < 1e-12);
    }

    #[test]
    fn whitening_inverts_regularized_gram() {
        for (seed, lambda) in [(1, 0.0), (2, 1e-3), (3, 1e-8)] {
            let b = KernelBasis::with_lambda(random_codebook(8, 3, seed), 1.0, lambda).unwrap();
            let gram = b.gram();
            assert!((gram - gram.transpose()).norm() == 0.0);
            assert!(gram.diagonal().iter().all(|&v| v == 1.0));
            // independent check via an explicit inverse
            let inv = b.regularized_gram().try_inverse().unwrap();
            let gtg = b.whitening().transpose() * b.whitening();
            assert!((gtg - &inv).norm() <= 1e-8 * inv.norm());
            assert!(b.whitening_residual() <= 1e-8 * 8.0);
            assert!(b.whitening_error().amax() <= 1e-6);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let cb = random_codebook(3, 2, 0);
        assert!(KernelBasis::with_lambda(cb.clone(), 0.0, 0.0).is_err());
        assert!(KernelBasis::with_lambda(cb.clone(), 1.0, -1.0).is_err());
        assert!(KernelBasis::with_lambda(cb, f64::NAN, 0.0).is_err());
    }
}
