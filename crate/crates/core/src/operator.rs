//! Weighted-graph Laplacian and Schrödinger perturbations.
//!
//! The operator acts on functions by
//! `(Lf)(i) = mu_i^{-1} sum_j c_ij (f(i) - f(j)) + V(i) f(i)`
//! and is self-adjoint in the measure-weighted inner product
//! `<f, g> = sum_i mu_i f(i) g(i)`.

use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, Site};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

#[derive(Clone)]
pub struct OperatorHandle {
    model: Arc<ManifoldModel>,
    potential: Vec<f64>,
}

impl OperatorHandle {
    /// Pure weighted Laplacian, `V = 0`. Constants are in the null space.
    pub fn laplacian(model: Arc<ManifoldModel>) -> Self {
        let n = model.site_count();
        OperatorHandle {
            model,
            potential: vec![0.0; n],
        }
    }

    /// Adds a nonnegative potential on top of the existing one.
    pub fn add_potential(&self, v: impl Fn(&Site) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.model.sites().iter().map(|s| v(s)).collect();
        self.add_potential_values(&values)
    }

    pub fn add_potential_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.potential.len() {
            return Err(Error::DimensionMismatch {
                expected: self.potential.len(),
                got: values.len(),
            });
        }
        for (i, &v) in values.iter().enumerate() {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(
                    "potential",
                    format!("must be finite and nonnegative, got {v} at site {i}"),
                ));
            }
        }
        let potential = self
            .potential
            .iter()
            .zip(values)
            .map(|(a, b)| a + b)
            .collect();
        Ok(OperatorHandle {
            model: self.model.clone(),
            potential,
        })
    }

    pub fn model(&self) -> &Arc<ManifoldModel> {
        &self.model
    }

    pub fn dim(&self) -> usize {
        self.potential.len()
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn has_potential(&self) -> bool {
        self.potential.iter().any(|&v| v > 0.0)
    }

    /// Applies the operator through the adjacency lists.
    pub fn apply(&self, f: &DVector<f64>) -> DVector<f64> {
        let n = self.dim();
        assert_eq!(f.len(), n, "function length must match model size");
        let mut out = DVector::zeros(n);
        for i in 0..n {
            let mut acc = 0.0;
            for &(j, _len, cond) in self.model.adjacency(i) {
                acc += cond * (f[i] - f[j]);
            }
            out[i] = acc / self.model.measure(i) + self.potential[i] * f[i];
        }
        out
    }

    /// Measure-weighted inner product `<f, g> = sum mu_i f_i g_i`.
    pub fn inner(&self, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for i in 0..f.len() {
            acc += self.model.measure(i) * f[i] * g[i];
        }
        acc
    }

    /// Dense matrix of the action on functions (not symmetric as a matrix;
    /// symmetric only in the weighted inner product).
    pub fn action_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            let inv_mu = 1.0 / self.model.measure(i);
            let mut diag = self.potential[i];
            for &(j, _len, cond) in self.model.adjacency(i) {
                diag += cond * inv_mu;
                a[(i, j)] -= cond * inv_mu;
            }
            a[(i, i)] = diag;
        }
        a
    }

    /// Similarity transform `D^{1/2} L D^{-1/2}` with `D = diag(mu)`.
    /// Symmetric positive semidefinite; shares the spectrum of the action.
    pub fn symmetrized_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        let sqrt_mu: Vec<f64> = (0..n).map(|i| self.model.measure(i).sqrt()).collect();
        let mut s = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut diag = 0.0;
            for &(j, _len, cond) in self.model.adjacency(i) {
                diag += cond;
                s[(i, j)] -= cond / (sqrt_mu[i] * sqrt_mu[j]);
            }
            s[(i, i)] = diag / self.model.measure(i) + self.potential[i];
        }
        // Adjacency stores each edge from both endpoints, so s is symmetric
        // up to floating summation order; enforce it exactly.
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        s
    }

    /// Diagonal sum of the action, equal to the eigenvalue sum.
    pub fn trace(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let s: f64 = self
                    .model
                    .adjacency(i)
                    .iter()
                    .map(|&(_, _, cond)| cond)
                    .sum();
                s / self.model.measure(i) + self.potential[i]
            })
            .sum()
    }
}

/// Smooth compactly supported bump `height * (1 - (d/radius)^2)^2` around a
/// site, a convenient strictly positive perturbation for experiments.
pub fn bump_potential(model: &ManifoldModel, center: usize, radius: f64, height: f64) -> Vec<f64> {
    let row = model.distance_row(center);
    row.iter()
        .map(|&d| {
            if d < radius {
                let u = d / radius;
                height * (1.0 - u * u).powi(2)
            } else {
                0.0
            }
        })
        .collect()
}
