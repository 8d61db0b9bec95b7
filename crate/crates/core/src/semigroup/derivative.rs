//! Closed-form time derivatives of the Gaussian factor `e^{-t^2/s}`.
//!
//! With `u = t / sqrt(s)` the k-th derivative is
//! `(-1)^k s^{-k/2} H_k(u) e^{-u^2}` where `H_k` is the physicists' Hermite
//! polynomial. Everything downstream needs only this closed form and the
//! envelope inequality `|d^k/dt^k e^{-t^2/s}| <= C_k e^{-t^2/2s} s^{-k/2}`.

use crate::error::{Error, Result};
use num_complex::Complex64;

pub const MAX_ORDER: usize = 8;

/// Physicists' Hermite polynomial by the three-term recurrence.
pub fn hermite(order: usize, u: f64) -> f64 {
    let mut prev = 1.0;
    if order == 0 {
        return prev;
    }
    let mut cur = 2.0 * u;
    for k in 1..order {
        let next = 2.0 * u * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

pub fn hermite_complex(order: usize, u: Complex64) -> Complex64 {
    let mut prev = Complex64::new(1.0, 0.0);
    if order == 0 {
        return prev;
    }
    let mut cur = 2.0 * u;
    for k in 1..order {
        let next = 2.0 * u * cur - 2.0 * k as f64 * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn check_order(order: usize) -> Result<()> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::invalid(
            "order",
            format!("derivative order must lie in 1..={MAX_ORDER}, got {order}"),
        ));
    }
    Ok(())
}

/// `d^order/dt^order e^{-t^2/s}` for `s > 0`.
pub fn gaussian_time_derivative(t: f64, s: f64, order: usize) -> Result<f64> {
    check_order(order)?;
    if !(s > 0.0) {
        return Err(Error::invalid("s", "scale must be positive"));
    }
    let u = t / s.sqrt();
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * s.powf(-(order as f64) / 2.0) * hermite(order, u) * (-u * u).exp())
}

/// Complex-time variant along `z` with fixed positive scale `s`:
/// `d^order/dz^order e^{-z^2/s}`.
pub fn gaussian_time_derivative_complex(z: Complex64, s: f64, order: usize) -> Result<Complex64> {
    check_order(order)?;
    if !(s > 0.0) {
        return Err(Error::invalid("s", "scale must be positive"));
    }
    let u = z / s.sqrt();
    let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * s.powf(-(order as f64) / 2.0) * hermite_complex(order, u) * (-u * u).exp())
}

/// Smallest constant with `|H_k(u)| e^{-u^2} <= C e^{-u^2/2}` for all real u,
/// i.e. the sup of `|H_k(u)| e^{-u^2/2}`, located by a dense scan. The sup of
/// any `H_k e^{-u^2/2}` sits below `|u| = sqrt(2k+1)` (the oscillator turning
/// point), so the scan window is safe for all admissible orders.
pub fn hermite_envelope_constant(order: usize) -> f64 {
    let envelope = |u: f64| hermite(order, u).abs() * (-u * u / 2.0).exp();
    let limit = (2.0 * order as f64 + 1.0).sqrt() + 4.0;
    let steps = 20_000;
    let mut best_u = 0.0f64;
    let mut sup = envelope(0.0);
    for i in 1..=steps {
        let u = limit * (i as f64 / steps as f64);
        let val = envelope(u);
        if val > sup {
            sup = val;
            best_u = u;
        }
    }
    // Golden-section refinement around the coarse argmax.
    let step = limit / steps as f64;
    let (mut lo, mut hi) = (best_u - step, best_u + step);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let a = hi - phi * (hi - lo);
        let b = lo + phi * (hi - lo);
        if envelope(a) < envelope(b) {
            lo = a;
        } else {
            hi = b;
        }
    }
    sup.max(envelope(0.5 * (lo + hi)))
}
