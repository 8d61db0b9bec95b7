//! Exact dense eigendecomposition of the operator, used as the oracle for
//! every semigroup and functional-calculus formula downstream.
//!
//! Decomposition happens in the symmetrized frame `D^{1/2} L D^{-1/2}` and the
//! eigenvectors are pulled back to functions, so the basis is orthonormal in
//! the measure-weighted inner product.

use crate::error::{Error, Result};
use crate::geometry::ManifoldModel;
use crate::operator::OperatorHandle;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::sync::Arc;

/// Relative tolerance below which a negative eigenvalue is rejected.
const NEGATIVE_TOL: f64 = 1e-9;
const GRAM_TOL: f64 = 1e-10;
const RESIDUAL_TOL: f64 = 1e-8;

pub struct SpectralData {
    model: Arc<ManifoldModel>,
    eigenvalues: Vec<f64>,
    /// Column `j` is the eigenfunction `phi_j` (function form, not symmetrized).
    basis: DMatrix<f64>,
    measures: Vec<f64>,
}

impl OperatorHandle {
    pub fn spectral_decompose(&self) -> Result<SpectralData> {
        SpectralData::decompose(self)
    }
}

impl SpectralData {
    pub fn decompose(op: &OperatorHandle) -> Result<SpectralData> {
        let n = op.dim();
        let s = op.symmetrized_matrix();
        let sf = faer::Mat::from_fn(n, n, |i, j| s[(i, j)]);
        let eig = sf
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        let raw = eig.S().column_vector();

        // faer returns eigenvalues in nondecreasing order.
        let lambda_max = raw[n - 1].max(1.0);
        let mut eigenvalues = Vec::with_capacity(n);
        for j in 0..n {
            let lam = raw[j];
            if lam < -NEGATIVE_TOL * lambda_max {
                return Err(Error::Decomposition(format!(
                    "negative eigenvalue {lam:.3e} beyond roundoff"
                )));
            }
            // Structurally nonnegative; negatives within tolerance are noise.
            eigenvalues.push(lam.max(0.0));
        }

        // The graph is connected, so the kernel is exactly the constants when
        // there is no potential and trivial otherwise. Snap by structure
        // rather than magnitude: genuine near-zero modes exist (the junction
        // is a weak link) and must not be flattened.
        if !op.has_potential() {
            let noise = 128.0 * f64::EPSILON * lambda_max * (n as f64).sqrt();
            if eigenvalues[0] > noise {
                return Err(Error::Decomposition(format!(
                    "potential-free operator should have a zero mode, got lambda_0 = {:.3e}",
                    eigenvalues[0]
                )));
            }
            eigenvalues[0] = 0.0;
        }

        let measures = op.model().measures();
        let inv_sqrt_mu: Vec<f64> = measures.iter().map(|&m| 1.0 / m.sqrt()).collect();
        let u = eig.U();
        let mut basis = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                basis[(i, j)] = u[(i, j)] * inv_sqrt_mu[i];
            }
        }

        let data = SpectralData {
            model: op.model().clone(),
            eigenvalues,
            basis,
            measures,
        };
        data.check_orthonormality()?;
        data.check_residuals(op)?;
        Ok(data)
    }

    fn check_orthonormality(&self) -> Result<()> {
        let n = self.dim();
        let mut weighted = self.basis.clone();
        for i in 0..n {
            let mu = self.measures[i];
            for j in 0..n {
                weighted[(i, j)] *= mu;
            }
        }
        let gram = self.basis.transpose() * weighted;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((gram[(i, j)] - target).abs());
            }
        }
        if worst > GRAM_TOL {
            return Err(Error::InvariantViolated {
                check: "eigenbasis orthonormality".into(),
                detail: format!("max Gram deviation {worst:.3e} exceeds {GRAM_TOL:.0e}"),
            });
        }
        Ok(())
    }

    fn check_residuals(&self, op: &OperatorHandle) -> Result<()> {
        let n = self.dim();
        for j in 0..n {
            let phi = self.mode(j);
            let applied = op.apply(&phi);
            let lam = self.eigenvalues[j];
            let mut norm2 = 0.0;
            for i in 0..n {
                let r = applied[i] - lam * phi[i];
                norm2 += self.measures[i] * r * r;
            }
            let allowed = RESIDUAL_TOL * lam.max(1.0);
            if norm2.sqrt() > allowed {
                return Err(Error::InvariantViolated {
                    check: "eigenpair residual".into(),
                    detail: format!(
                        "mode {j}: residual {:.3e} exceeds {allowed:.3e}",
                        norm2.sqrt()
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn model(&self) -> &Arc<ManifoldModel> {
        &self.model
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Smallest strictly positive eigenvalue, if any.
    pub fn lambda_min_positive(&self) -> Option<f64> {
        self.eigenvalues.iter().copied().find(|&l| l > 0.0)
    }

    pub fn zero_modes(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l == 0.0).count()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn mode(&self, j: usize) -> DVector<f64> {
        DVector::from(self.basis.column(j))
    }

    /// Expansion coefficients `c_j = <f, phi_j>` in the weighted inner product.
    pub fn coefficients(&self, f: &DVector<f64>) -> DVector<f64> {
        let weighted = DVector::from_fn(f.len(), |i, _| self.measures[i] * f[i]);
        self.basis.transpose() * weighted
    }

    pub fn synthesize(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        &self.basis * coeffs
    }

    /// Applies `symbol(L)` to a function through the eigenbasis.
    pub fn apply_symbol(&self, symbol: impl Fn(f64) -> f64, f: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.coefficients(f);
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c *= symbol(self.eigenvalues[j]);
        }
        self.synthesize(&coeffs)
    }

    pub fn apply_symbol_complex(
        &self,
        symbol: impl Fn(f64) -> Complex64,
        f: &DVector<Complex64>,
    ) -> DVector<Complex64> {
        let n = self.dim();
        let mut coeffs = DVector::from_element(n, Complex64::new(0.0, 0.0));
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                acc += self.measures[i] * self.basis[(i, j)] * f[i];
            }
            coeffs[j] = acc * symbol(self.eigenvalues[j]);
        }
        let mut out = DVector::from_element(n, Complex64::new(0.0, 0.0));
        for j in 0..n {
            let c = coeffs[j];
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for i in 0..n {
                out[i] += self.basis[(i, j)] * c;
            }
        }
        out
    }

    /// Kernel of `weight(L)` in the convention
    /// `(weight(L) f)(x) = sum_y K(x,y) f(y) mu_y`. Exactly symmetric.
    pub fn kernel_matrix(&self, weight: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| weight(l)).collect();
        self.kernel_matrix_with(&weights)
    }

    /// Complex-weight kernel, assembled as `K = Kre + i Kim` from two real
    /// syntheses so that real matrix products do the heavy lifting.
    pub fn kernel_matrix_complex(&self, weight: impl Fn(f64) -> Complex64) -> DMatrix<Complex64> {
        let weights: Vec<Complex64> = self.eigenvalues.iter().map(|&l| weight(l)).collect();
        let kre = self.kernel_matrix_with(&weights.iter().map(|w| w.re).collect::<Vec<_>>());
        let kim = self.kernel_matrix_with(&weights.iter().map(|w| w.im).collect::<Vec<_>>());
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            Complex64::new(kre[(i, j)], kim[(i, j)])
        })
    }

    fn kernel_matrix_with(&self, weights: &[f64]) -> DMatrix<f64> {
        let n = self.dim();
        let mut scaled = self.basis.clone();
        for j in 0..n {
            for i in 0..n {
                scaled[(i, j)] *= weights[j];
            }
        }
        let mut k = scaled * self.basis.transpose();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (k[(i, j)] + k[(j, i)]);
                k[(i, j)] = avg;
                k[(j, i)] = avg;
            }
        }
        k
    }

    /// Weighted inner product shared by all spectral formulas.
    pub fn inner(&self, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..f.len() {
            acc += self.measures[i] * f[i] * g[i];
        }
        acc
    }

    pub fn norm(&self, f: &DVector<f64>) -> f64 {
        self.inner(f, f).sqrt()
    }
}
