//! Logarithmic-grid trapezoid integration over `(0, infinity)`.
//!
//! After the substitution `v = e^u` the integrands used here decay double
//! exponentially at both ends, so the equispaced trapezoid rule converges
//! geometrically. Doubling the node count reuses previous evaluations; the
//! result is accepted once successive estimates agree to the target.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub const MIN_NODES: usize = 32;

/// How much the integrand may retain at the upper truncation point relative
/// to its peak before the integral is declared nonconvergent.
const TAIL_REL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct QuadratureSpec {
    /// Initial node count, at least 32.
    pub nodes: usize,
    /// Relative agreement between successive refinements.
    pub target: f64,
    /// Absolute agreement floor, for integrals whose true value is near zero.
    pub absolute: f64,
    pub max_doublings: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            nodes: 256,
            target: 1e-8,
            absolute: 1e-12,
            max_doublings: 8,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.nodes < MIN_NODES {
            return Err(Error::invalid(
                "quadrature.nodes",
                format!("need at least {MIN_NODES} nodes"),
            ));
        }
        if !(self.target > 0.0) {
            return Err(Error::invalid("quadrature.target", "must be positive"));
        }
        if !(self.absolute >= 0.0) {
            return Err(Error::invalid("quadrature.absolute", "must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct QuadOutcome<T> {
    pub value: T,
    pub nodes_used: usize,
    /// Norm of the difference between the last two refinements.
    pub last_delta: f64,
    /// Integrand magnitude at the upper truncation relative to its peak.
    pub tail_ratio: f64,
}

/// Values the engine can accumulate: scalars and dense matrices, real or
/// complex. Norm is the maximum absolute entry.
pub trait QuadVector: Clone {
    fn zero_like(&self) -> Self;
    fn scaled_add(&mut self, other: &Self, w: f64);
    fn scale(&mut self, w: f64);
    fn max_abs(&self) -> f64;
}

impl QuadVector for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn scaled_add(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
    fn scale(&mut self, w: f64) {
        *self *= w;
    }
    fn max_abs(&self) -> f64 {
        self.abs()
    }
}

impl QuadVector for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn scaled_add(&mut self, other: &Self, w: f64) {
        *self += other * w;
    }
    fn scale(&mut self, w: f64) {
        *self *= w;
    }
    fn max_abs(&self) -> f64 {
        self.norm()
    }
}

impl QuadVector for DMatrix<f64> {
    fn zero_like(&self) -> Self {
        DMatrix::zeros(self.nrows(), self.ncols())
    }
    fn scaled_add(&mut self, other: &Self, w: f64) {
        self.zip_apply(other, |a, b| *a += b * w);
    }
    fn scale(&mut self, w: f64) {
        self.apply(|x| *x *= w);
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl QuadVector for DVector<f64> {
    fn zero_like(&self) -> Self {
        DVector::zeros(self.nrows())
    }
    fn scaled_add(&mut self, other: &Self, w: f64) {
        self.zip_apply(other, |a, b| *a += b * w);
    }
    fn scale(&mut self, w: f64) {
        self.apply(|x| *x *= w);
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

impl QuadVector for DMatrix<Complex64> {
    fn zero_like(&self) -> Self {
        DMatrix::from_element(self.nrows(), self.ncols(), Complex64::new(0.0, 0.0))
    }
    fn scaled_add(&mut self, other: &Self, w: f64) {
        self.zip_apply(other, |a, b| *a += b * w);
    }
    fn scale(&mut self, w: f64) {
        self.apply(|x| *x *= w);
    }
    fn max_abs(&self) -> f64 {
        self.iter().fold(0.0f64, |m, x| m.max(x.norm()))
    }
}

/// Integrates `f` over `[v_min, v_max]` on a logarithmic grid. The integrand
/// must be negligible at `v_max` relative to its peak; use
/// [`integrate_log_segment`] for finite windows without decay.
pub fn integrate_log<T: QuadVector>(
    mut f: impl FnMut(f64) -> T,
    v_min: f64,
    v_max: f64,
    spec: &QuadratureSpec,
) -> Result<QuadOutcome<T>> {
    check_window(v_min, v_max)?;
    // g(u) = f(e^u) e^u is the integrand after substitution.
    let g = |u: f64| -> T {
        let v = u.exp();
        let mut val = f(v);
        val.scale(v);
        val
    };
    integrate_impl(g, v_min.ln(), v_max.ln(), spec, true)
}

/// Half-width of the tanh-sinh node range; the transform weight there is
/// below 1e-20, well past any contribution at working precision.
const TANH_SINH_SPAN: f64 = 3.5;

/// Integrates `f` over a finite window `[v_min, v_max]` through a tanh-sinh
/// change of variable in `ln v`. The transform gives the endpoints
/// double-exponentially small weights, so smooth integrands converge
/// geometrically whether or not they vanish at the window edges. Intended
/// for piecewise integration around interior kinks or jumps; the caller
/// owns the truncation error.
pub fn integrate_log_segment<T: QuadVector>(
    mut f: impl FnMut(f64) -> T,
    v_min: f64,
    v_max: f64,
    spec: &QuadratureSpec,
) -> Result<QuadOutcome<T>> {
    check_window(v_min, v_max)?;
    let mid = 0.5 * (v_min.ln() + v_max.ln());
    let half = 0.5 * (v_max.ln() - v_min.ln());
    let g = |s: f64| -> T {
        let q = std::f64::consts::FRAC_PI_2 * s.sinh();
        let u = mid + half * q.tanh();
        let jac = half * std::f64::consts::FRAC_PI_2 * s.cosh() / q.cosh().powi(2);
        let v = u.exp();
        let mut val = f(v);
        val.scale(v * jac);
        val
    };
    integrate_impl(g, -TANH_SINH_SPAN, TANH_SINH_SPAN, spec, false)
}

fn check_window(v_min: f64, v_max: f64) -> Result<()> {
    if !(v_min > 0.0) || !(v_max > v_min) {
        return Err(Error::invalid(
            "quadrature.bounds",
            format!("need 0 < v_min < v_max, got [{v_min:.3e}, {v_max:.3e}]"),
        ));
    }
    Ok(())
}

fn integrate_impl<T: QuadVector>(
    mut g: impl FnMut(f64) -> T,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
    require_decay: bool,
) -> Result<QuadOutcome<T>> {
    spec.validate()?;
    let mut intervals = spec.nodes;
    let mut h = (b - a) / intervals as f64;
    let left = g(a);
    let right = g(b);
    let mut peak = left.max_abs().max(right.max_abs());

    let mut estimate = left.zero_like();
    estimate.scaled_add(&left, 0.5);
    estimate.scaled_add(&right, 0.5);
    for i in 1..intervals {
        let gi = g(a + i as f64 * h);
        peak = peak.max(gi.max_abs());
        estimate.scaled_add(&gi, 1.0);
    }
    estimate.scale(h);

    let tail_ratio = if peak > 0.0 {
        right.max_abs() / peak
    } else {
        0.0
    };
    if require_decay && tail_ratio > TAIL_REL {
        return Err(Error::NonConvergence {
            reason: "integrand does not decay at the upper truncation".into(),
            tail: right.max_abs() * (b - a),
        });
    }

    let mut last_delta = f64::INFINITY;
    for _ in 0..spec.max_doublings {
        h *= 0.5;
        let mut midsum = estimate.zero_like();
        for i in 0..intervals {
            let gi = g(a + (2 * i + 1) as f64 * h);
            peak = peak.max(gi.max_abs());
            midsum.scaled_add(&gi, 1.0);
        }
        intervals *= 2;
        let mut refined = estimate.clone();
        refined.scale(0.5);
        refined.scaled_add(&midsum, h);

        let mut diff = refined.clone();
        diff.scaled_add(&estimate, -1.0);
        last_delta = diff.max_abs();
        estimate = refined;
        let norm = estimate.max_abs();
        if !norm.is_finite() {
            return Err(Error::NonConvergence {
                reason: "integrand produced non-finite values".into(),
                tail: f64::INFINITY,
            });
        }
        if last_delta <= spec.target * norm + spec.absolute {
            return Ok(QuadOutcome {
                value: estimate,
                nodes_used: intervals + 1,
                last_delta,
                tail_ratio,
            });
        }
    }
    Err(Error::NonConvergence {
        reason: format!(
            "estimates still moving after {} doublings (last delta {last_delta:.3e})",
            spec.max_doublings
        ),
        tail: last_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_integral() {
        let out = integrate_log(|v| (-v).exp(), 1e-12, 200.0, &QuadratureSpec::default()).unwrap();
        assert!((out.value - 1.0).abs() < 1e-10, "{}", out.value);
    }

    #[test]
    fn gamma_two() {
        let out = integrate_log(|v| v * (-v).exp(), 1e-12, 300.0, &QuadratureSpec::default())
            .unwrap();
        assert!((out.value - 1.0).abs() < 1e-10, "{}", out.value);
    }

    #[test]
    fn log_normal_mass() {
        // Pure Gaussian in u; integral is sqrt(2 pi).
        let out = integrate_log(
            |v| (-(v.ln().powi(2)) / 2.0).exp() / v,
            1e-10,
            1e10,
            &QuadratureSpec::default(),
        )
        .unwrap();
        let expected = (2.0 * std::f64::consts::PI).sqrt();
        assert!((out.value - expected).abs() < 1e-12);
    }

    #[test]
    fn detects_fat_tail() {
        let err = integrate_log(|v| 1.0 / v, 1e-6, 1e6, &QuadratureSpec::default()).unwrap_err();
        assert!(matches!(err, Error::NonConvergence { .. }));
    }

    #[test]
    fn segment_accepts_non_decaying_integrands() {
        let spec = QuadratureSpec::default();
        let out = integrate_log_segment(|v| 1.0 / v, 1.0, 2.0, &spec).unwrap();
        assert!((out.value - std::f64::consts::LN_2).abs() < 1e-12);
        // Same integrand over a split range matches the closed form too.
        let a = integrate_log_segment(|v| v.exp(), 0.5, 1.0, &spec).unwrap();
        let b = integrate_log_segment(|v| v.exp(), 1.0, 2.0, &spec).unwrap();
        let exact = 2f64.exp() - 0.5f64.exp();
        assert!((a.value + b.value - exact).abs() < 1e-8 * exact);
    }

    #[test]
    fn rejects_tiny_node_count() {
        let spec = QuadratureSpec {
            nodes: 8,
            ..Default::default()
        };
        assert!(integrate_log(|v| (-v).exp(), 1e-6, 10.0, &spec).is_err());
    }

    #[test]
    fn matrix_integrand_matches_scalar() {
        let spec = QuadratureSpec::default();
        let scalar = integrate_log(|v| (-2.0 * v).exp(), 1e-12, 100.0, &spec).unwrap();
        let matrix = integrate_log(
            |v| DMatrix::from_element(3, 3, (-2.0 * v).exp()),
            1e-12,
            100.0,
            &spec,
        )
        .unwrap();
        for x in matrix.value.iter() {
            assert!((x - scalar.value).abs() < 1e-14);
        }
        assert!((scalar.value - 0.5).abs() < 1e-10);
    }
}
