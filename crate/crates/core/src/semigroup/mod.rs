//! Heat and Poisson semigroups of the operator, as explicit kernels.
//!
//! Every kernel uses the convention `(Tf)(x) = sum_y K(x,y) f(y) mu_y`, so
//! composition is matrix multiplication through `diag(mu)` and the heat
//! kernel of the pure Laplacian has unit row mass.

pub mod derivative;
pub mod quad;
pub mod subordination;

pub use derivative::{
    gaussian_time_derivative, gaussian_time_derivative_complex, hermite_envelope_constant,
};
pub use quad::{integrate_log, integrate_log_segment, QuadOutcome, QuadVector, QuadratureSpec};
pub use subordination::{
    complex_poisson_subordination, poisson_scalar_subordination, poisson_subordination,
    poisson_upper_via_heat, poisson_upper_via_heat_piecewise, HeatProvider, SpectralHeat,
};

use crate::error::{Error, Result};
use crate::spectral::SpectralData;
use nalgebra::{DMatrix, Scalar};
use num_complex::Complex64;
use std::f64::consts::FRAC_PI_4;

/// A kernel at one time parameter and derivative order. `T` is `f64` for the
/// real semigroups and `Complex64` inside the sector.
#[derive(Debug, Clone)]
pub struct KernelMatrix<T: Scalar> {
    pub time: T,
    pub order: usize,
    pub values: DMatrix<T>,
}

impl KernelMatrix<f64> {
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.values.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)]).abs());
            }
        }
        worst
    }

    /// `sum_y K(x,y) mu_y`; equals 1 for the pure-Laplacian heat kernel.
    pub fn row_mass(&self, x: usize, measures: &[f64]) -> f64 {
        let mut acc = 0.0;
        for y in 0..self.values.ncols() {
            acc += self.values[(x, y)] * measures[y];
        }
        acc
    }

    /// Semigroup composition `(K1 K2)(x,y) = sum_z K1(x,z) K2(z,y) mu_z`.
    pub fn compose(&self, other: &KernelMatrix<f64>, measures: &[f64]) -> DMatrix<f64> {
        let n = self.values.nrows();
        let mut weighted = other.values.clone();
        for z in 0..n {
            let mu = measures[z];
            for y in 0..n {
                weighted[(z, y)] *= mu;
            }
        }
        // Weight rows of the right factor by measure, then multiply.
        &self.values * weighted
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl KernelMatrix<Complex64> {
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.values.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.values[(i, j)] - self.values[(j, i)]).norm());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, x| m.max(x.norm()))
    }
}

/// Kernel of `e^{-tL}`.
pub fn heat_kernel(spec: &SpectralData, t: f64) -> Result<KernelMatrix<f64>> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "time must be positive"));
    }
    Ok(KernelMatrix {
        time: t,
        order: 0,
        values: spec.kernel_matrix(|l| (-t * l).exp()),
    })
}

/// Scalar weight of the Poisson kernel of order k.
pub fn poisson_weight(t: f64, lambda: f64, k: usize) -> f64 {
    let x = t * lambda.sqrt();
    x.powi(k as i32) * (-x).exp()
}

/// Kernel of `(t sqrt(L))^k e^{-t sqrt(L)}` through the eigenbasis.
pub fn poisson_kernel_spectral(spec: &SpectralData, t: f64, k: usize) -> Result<KernelMatrix<f64>> {
    if !(t > 0.0) {
        return Err(Error::invalid("t", "time must be positive"));
    }
    Ok(KernelMatrix {
        time: t,
        order: k,
        values: spec.kernel_matrix(|l| poisson_weight(t, l, k)),
    })
}

/// Rejects complex times outside the open sector `|arg z| < pi/4`, where the
/// subordination integral stops converging absolutely.
pub fn ensure_sector(z: Complex64) -> Result<()> {
    if !(z.norm() > 0.0) || z.arg().abs() >= FRAC_PI_4 || !z.is_finite() {
        return Err(Error::OutsideSector(z));
    }
    Ok(())
}

/// Kernel of `(z sqrt(L))^k e^{-z sqrt(L)}` through the eigenbasis.
pub fn complex_poisson_kernel_spectral(
    spec: &SpectralData,
    z: Complex64,
    k: usize,
) -> Result<KernelMatrix<Complex64>> {
    ensure_sector(z)?;
    Ok(KernelMatrix {
        time: z,
        order: k,
        values: spec.kernel_matrix_complex(|l| {
            let w = z * l.sqrt();
            if k == 0 {
                (-w).exp()
            } else {
                w.powu(k as u32) * (-w).exp()
            }
        }),
    })
}
