//! Functional calculus of the operator square root through Laplace-transform
//! multipliers.
//!
//! A multiplier is declared by its time profile `m(t)` with a sup bound; the
//! operator it induces acts as the time integral of `sqrt(L) e^{-t sqrt L} f`
//! weighted by `m`.  The module evaluates that integral by quadrature in the
//! eigenbasis, where it collapses to one scalar integral per mode, and checks
//! it against the exact spectral route through the multiplier's symbol.
//! Imaginary powers of the operator and the Littlewood-Paley vertical square
//! function are built on top.

pub mod gamma;

use crate::error::{Error, Result};
use crate::semigroup::{integrate_log, integrate_log_segment, poisson_weight, QuadratureSpec};
use crate::spectral::SpectralData;
use gamma::gamma;
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;
use std::sync::Arc;

/// Head of the time window relative to `1/sqrt(lambda_max)`.  Truncation
/// drops at most this fraction of the defining integral on the fastest mode,
/// so it stays well below the quadrature target.
const T_HEAD: f64 = 1e-7;
/// Tail of the time window relative to `1/sqrt(lambda_min_positive)`.
const T_TAIL: f64 = 40.0;

type DynProfile = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;

/// A multiplier of Laplace-transform type: a bounded time profile `m(t)`
/// together with the symbol it induces,
/// `M(z) = integral of z e^{-tz} m(t) dt` for `z > 0` and `M(0) = 0`.
/// The sup bound `c0` also bounds the symbol on `z > 0`.
#[derive(Clone)]
pub struct MultiplierSpec {
    pub name: String,
    m: DynProfile,
    symbol: DynProfile,
    /// Sup bound on `|m(t)|`.
    pub c0: f64,
    /// Frequency of `m` in log time; sets the quadrature node budget.
    pub oscillation: f64,
    /// Times where the profile has a kink or a jump. The time quadrature
    /// splits its window there so each piece it sees is smooth.
    breaks: Vec<f64>,
}

impl MultiplierSpec {
    /// `m(t) = 1`, symbol 1 on positive arguments.
    pub fn constant() -> Self {
        MultiplierSpec {
            name: "constant".into(),
            m: Arc::new(|_| Complex64::new(1.0, 0.0)),
            symbol: Arc::new(|z| Complex64::new(if z > 0.0 { 1.0 } else { 0.0 }, 0.0)),
            c0: 1.0,
            oscillation: 0.0,
            breaks: Vec::new(),
        }
    }

    /// `m(t) = 1` on `[0, T]`, symbol `1 - e^{-Tz}`.
    pub fn indicator(t_end: f64) -> Result<Self> {
        if !(t_end > 0.0) {
            return Err(Error::invalid("indicator length", "must be positive"));
        }
        Ok(MultiplierSpec {
            name: format!("indicator({t_end})"),
            m: Arc::new(move |t| Complex64::new(if t <= t_end { 1.0 } else { 0.0 }, 0.0)),
            symbol: Arc::new(move |z| {
                if z > 0.0 {
                    Complex64::new(1.0 - (-t_end * z).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
            c0: 1.0,
            oscillation: 0.0,
            breaks: vec![t_end],
        })
    }

    /// Multiplier whose symbol is `lambda^{is}` at `z = sqrt(lambda)`:
    /// `m(t) = t^{-2is} / gamma(1 - 2is)`.
    pub fn imaginary_power(s: f64) -> Self {
        let sigma = -2.0 * s;
        let norm = gamma(Complex64::new(1.0, sigma));
        MultiplierSpec {
            name: format!("imaginary_power({s})"),
            m: Arc::new(move |t| (Complex64::new(0.0, sigma) * t.ln()).exp() / norm),
            symbol: Arc::new(move |z| {
                if z > 0.0 {
                    (Complex64::new(0.0, 2.0 * s) * z.ln()).exp()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
            c0: 1.0 / norm.norm(),
            oscillation: 2.0 * s.abs(),
            breaks: Vec::new(),
        }
    }

    /// Piecewise-linear profile through `(t, value)` samples, held constant
    /// beyond the first and last node.  The symbol integrates the profile in
    /// closed form segment by segment.
    pub fn from_table(samples: Vec<(f64, Complex64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::invalid("table", "need at least two samples"));
        }
        for w in samples.windows(2) {
            if !(w[0].0 > 0.0 && w[1].0 > w[0].0) {
                return Err(Error::invalid(
                    "table",
                    "sample times must be positive and strictly increasing",
                ));
            }
        }
        let c0 = samples.iter().map(|(_, v)| v.norm()).fold(0.0, f64::max);
        let breaks: Vec<f64> = samples.iter().map(|&(t, _)| t).collect();
        let table = Arc::new(samples);
        let t_interp = table.clone();
        let m = Arc::new(move |t: f64| -> Complex64 {
            let pts = &*t_interp;
            if t <= pts[0].0 {
                return pts[0].1;
            }
            if t >= pts[pts.len() - 1].0 {
                return pts[pts.len() - 1].1;
            }
            let i = pts.partition_point(|&(u, _)| u <= t) - 1;
            let (a, va) = pts[i];
            let (b, vb) = pts[i + 1];
            va + (vb - va) * ((t - a) / (b - a))
        });
        let t_symbol = table.clone();
        let symbol = Arc::new(move |z: f64| -> Complex64 {
            if z <= 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let pts = &*t_symbol;
            let last = pts.len() - 1;
            // Held head and tail integrate to closed form; each linear
            // segment alpha + beta t contributes alpha I0 + beta I1 with
            // I0 = e^{-az} - e^{-bz},
            // I1 = a e^{-az} - b e^{-bz} + (e^{-az} - e^{-bz}) / z.
            let mut total = pts[0].1 * (1.0 - (-pts[0].0 * z).exp())
                + pts[last].1 * (-pts[last].0 * z).exp();
            for w in pts.windows(2) {
                let (a, va) = w[0];
                let (b, vb) = w[1];
                let ea = (-a * z).exp();
                let eb = (-b * z).exp();
                let i0 = ea - eb;
                let i1 = a * ea - b * eb + (ea - eb) / z;
                let beta = (vb - va) / (b - a);
                let alpha = va - beta * a;
                total += alpha * i0 + beta * i1;
            }
            total
        });
        Ok(MultiplierSpec {
            name: "table".into(),
            m,
            symbol,
            c0,
            oscillation: 0.0,
            breaks,
        })
    }

    pub fn profile(&self, t: f64) -> Complex64 {
        (self.m)(t)
    }

    pub fn symbol(&self, z: f64) -> Complex64 {
        (self.symbol)(z)
    }
}

/// Route selector for operators that exist both as exact spectral formulas
/// and as time quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ApplyRoute {
    Oracle,
    Quadrature,
}

fn complex_split(f: &DVector<Complex64>) -> (DVector<f64>, DVector<f64>) {
    (f.map(|z| z.re), f.map(|z| z.im))
}

fn complex_join(re: DVector<f64>, im: DVector<f64>) -> DVector<Complex64> {
    DVector::from_fn(re.nrows(), |i, _| Complex64::new(re[i], im[i]))
}

/// Expansion coefficients of a complex site vector in the weighted basis.
pub fn complex_coefficients(spec: &SpectralData, f: &DVector<Complex64>) -> DVector<Complex64> {
    let (re, im) = complex_split(f);
    complex_join(spec.coefficients(&re), spec.coefficients(&im))
}

/// Synthesis of a complex coefficient vector back to site values.
pub fn complex_synthesize(spec: &SpectralData, c: &DVector<Complex64>) -> DVector<Complex64> {
    let (re, im) = complex_split(c);
    complex_join(spec.synthesize(&re), spec.synthesize(&im))
}

/// Exact spectral application of a multiplier through its symbol at
/// `sqrt(lambda)`: the result is `sum_j symbol(sqrt lambda_j) <f, phi_j> phi_j`.
pub fn multiplier_oracle(
    spec: &SpectralData,
    symbol: impl Fn(f64) -> Complex64,
    f: &DVector<Complex64>,
) -> DVector<Complex64> {
    let mut c = complex_coefficients(spec, f);
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= symbol(spec.eigenvalues()[j].sqrt());
    }
    complex_synthesize(spec, &c)
}

fn time_window(spec: &SpectralData) -> Result<(f64, f64)> {
    let lam_min = spec.lambda_min_positive().ok_or_else(|| {
        Error::invalid("spectrum", "no positive eigenvalue to set the time window")
    })?;
    Ok((
        T_HEAD / spec.lambda_max().sqrt(),
        T_TAIL / lam_min.sqrt(),
    ))
}

/// Per-mode factors of a Laplace-transform multiplier along the spectrum,
/// by time quadrature of `sqrt(lambda) e^{-t sqrt(lambda)} m(t)`.  The window
/// splits at the profile's kinks so every quadrature segment is smooth.  The
/// zero mode gets factor zero, matching the symbol convention at the origin.
pub fn laplace_multiplier_factors(
    spec: &SpectralData,
    mult: &MultiplierSpec,
    quad: &QuadratureSpec,
) -> Result<DVector<Complex64>> {
    quad.validate()?;
    let (t_min, t_max) = time_window(spec)?;
    let local = QuadratureSpec {
        nodes: quad
            .nodes
            .max(256)
            .max((64.0 * (1.0 + mult.oscillation)).ceil() as usize),
        ..*quad
    };
    let mut edges = vec![t_min];
    edges.extend(
        mult.breaks
            .iter()
            .copied()
            .filter(|&b| b > t_min && b < t_max),
    );
    edges.sort_by(f64::total_cmp);
    edges.push(t_max);
    let factors: Result<Vec<Complex64>> = spec
        .eigenvalues()
        .par_iter()
        .map(|&lam| {
            if lam <= 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let z = lam.sqrt();
            let integrand = |t: f64| mult.profile(t) * z * (-t * z).exp();
            let mut total = Complex64::new(0.0, 0.0);
            for w in edges.windows(2) {
                // The bounded profile caps the discarded head at c0 * T_HEAD
                // and the discarded tail at c0 * e^{-T_TAIL}, so no runtime
                // decay check is needed at the truncation times.
                let out =
                    integrate_log_segment(integrand, w[0], w[1], &local).map_err(|e| match e {
                        Error::NonConvergence { reason, tail } => Error::NonConvergence {
                            reason: format!(
                                "multiplier {} at sqrt(lambda) = {z:.3e}: {reason}",
                                mult.name
                            ),
                            tail,
                        },
                        other => other,
                    })?;
                total += out.value;
            }
            Ok(total)
        })
        .collect();
    Ok(DVector::from_vec(factors?))
}

/// Apply a Laplace-transform multiplier by time quadrature in the eigenbasis.
pub fn apply_laplace_multiplier(
    spec: &SpectralData,
    mult: &MultiplierSpec,
    f: &DVector<Complex64>,
    quad: &QuadratureSpec,
) -> Result<DVector<Complex64>> {
    let factors = laplace_multiplier_factors(spec, mult, quad)?;
    let mut c = complex_coefficients(spec, f);
    for (j, cj) in c.iter_mut().enumerate() {
        *cj *= factors[j];
    }
    Ok(complex_synthesize(spec, &c))
}

/// Imaginary power of the operator: `lambda^{is}` on positive modes, zero on
/// the zero mode.
pub fn imaginary_power(
    spec: &SpectralData,
    s: f64,
    f: &DVector<Complex64>,
    route: ApplyRoute,
    quad: &QuadratureSpec,
) -> Result<DVector<Complex64>> {
    match route {
        ApplyRoute::Oracle => {
            let sym = |z: f64| {
                if z > 0.0 {
                    (Complex64::new(0.0, 2.0 * s) * z.ln()).exp()
                } else {
                    Complex64::new(0.0, 0.0)
                }
            };
            Ok(multiplier_oracle(spec, sym, f))
        }
        ApplyRoute::Quadrature => {
            apply_laplace_multiplier(spec, &MultiplierSpec::imaginary_power(s), f, quad)
        }
    }
}

/// The eigenmode constant of the vertical square function: a pure positive
/// mode maps to `|phi_j|` times this value.
pub fn g_norm_constant(kappa: u32) -> f64 {
    let gamma_2k: f64 = (1..2 * kappa).map(|i| i as f64).product();
    gamma_2k.sqrt() / 2f64.powi(kappa as i32)
}

/// Littlewood-Paley vertical square function
/// `g(f)(x) = (integral of |(t sqrt L)^kappa e^{-t sqrt L} f(x)|^2 dt/t)^{1/2}`
/// by pointwise time quadrature.
pub fn g_function(
    spec: &SpectralData,
    f: &DVector<f64>,
    kappa: u32,
    quad: &QuadratureSpec,
) -> Result<DVector<f64>> {
    if kappa == 0 {
        return Err(Error::invalid("kappa", "square function needs order >= 1"));
    }
    quad.validate()?;
    let (t_min, t_max) = time_window(spec)?;
    let coeffs = spec.coefficients(f);
    let evs = spec.eigenvalues();
    let squares = integrate_log(
        |t| {
            let weighted = DVector::from_fn(coeffs.nrows(), |j, _| {
                coeffs[j] * poisson_weight(t, evs[j], kappa as usize)
            });
            let slice = spec.synthesize(&weighted);
            slice.map(|v| v * v / t)
        },
        t_min,
        t_max,
        quad,
    )?;
    Ok(squares.value.map(|v| v.max(0.0).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ManifoldModel, ModelParams};
    use crate::operator::OperatorHandle;
    use crate::spectral::SpectralData;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc as StdArc;

    fn spectral(h: f64, r_max: f64) -> SpectralData {
        let model = StdArc::new(ManifoldModel::build(ModelParams::radial(4, 3, h, r_max)).unwrap());
        let op = OperatorHandle::laplacian(model);
        SpectralData::decompose(&op).unwrap()
    }

    fn random_complex(n: usize, seed: u64) -> DVector<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DVector::from_fn(n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        })
    }

    fn norm_mu(spec: &SpectralData, f: &DVector<Complex64>) -> f64 {
        f.iter()
            .zip(spec.measures())
            .map(|(z, &mu)| mu * z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    fn positive_part(spec: &SpectralData, f: &DVector<Complex64>) -> DVector<Complex64> {
        multiplier_oracle(
            spec,
            |z| Complex64::new(if z > 0.0 { 1.0 } else { 0.0 }, 0.0),
            f,
        )
    }

    #[test]
    fn oracle_with_unit_symbol_removes_the_mean_mode() {
        let spec = spectral(0.2, 12.0);
        let f = random_complex(spec.dim(), 11);
        let got = positive_part(&spec, &f);
        // Independent route: subtract the weighted mean.
        let total: f64 = spec.measures().iter().sum();
        let mean = f
            .iter()
            .zip(spec.measures())
            .map(|(z, &mu)| z * mu)
            .sum::<Complex64>()
            / total;
        for (g, z) in got.iter().zip(f.iter()) {
            assert!((g - (z - mean)).norm() < 1e-10);
        }
    }

    #[test]
    fn oracle_exponential_symbol_matches_real_spectral_route() {
        let spec = spectral(0.2, 12.0);
        let f_re = DVector::from_fn(spec.dim(), |i, _| ((i * 13 % 7) as f64 - 3.0) / 3.0);
        let f = f_re.map(|x| Complex64::new(x, 0.0));
        let got = multiplier_oracle(&spec, |z| Complex64::new((-z).exp(), 0.0), &f);
        let want = spec.apply_symbol(|lam| (-lam.sqrt()).exp(), &f_re);
        for (g, w) in got.iter().zip(want.iter()) {
            assert!((g.re - w).abs() < 1e-12 && g.im.abs() < 1e-12);
        }
    }

    #[test]
    fn oracle_is_linear_and_contractive_on_positive_modes() {
        let spec = spectral(0.2, 12.0);
        let f = random_complex(spec.dim(), 3);
        let g = random_complex(spec.dim(), 4);
        let alpha = Complex64::new(0.7, -1.2);
        let sym = |z: f64| {
            if z > 0.0 {
                Complex64::new(0.4, 0.0) + Complex64::new(0.0, 0.3) * (-z).exp()
            } else {
                Complex64::new(0.0, 0.0)
            }
        };
        let combined = multiplier_oracle(&spec, sym, &(f.map(|z| z * alpha) + &g));
        let separate = multiplier_oracle(&spec, sym, &f).map(|z| z * alpha)
            + multiplier_oracle(&spec, sym, &g);
        for (a, b) in combined.iter().zip(separate.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
        let c0 = 0.5;
        let bound = c0 * norm_mu(&spec, &positive_part(&spec, &f));
        assert!(norm_mu(&spec, &multiplier_oracle(&spec, sym, &f)) <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn constant_profile_quadrature_recovers_positive_projection() {
        let spec = spectral(0.2, 12.0);
        let quad = QuadratureSpec::default();
        let f = random_complex(spec.dim(), 21);
        let got = apply_laplace_multiplier(&spec, &MultiplierSpec::constant(), &f, &quad).unwrap();
        let want = positive_part(&spec, &f);
        let err = norm_mu(&spec, &(got - &want)) / norm_mu(&spec, &want);
        assert!(err <= 1e-6, "relative error {err:.3e}");
    }

    #[test]
    fn quadrature_matches_oracle_for_the_declared_profiles() {
        let spec = spectral(0.2, 12.0);
        let quad = QuadratureSpec::default();
        let mults = [
            MultiplierSpec::constant(),
            MultiplierSpec::indicator(2.5).unwrap(),
            MultiplierSpec::imaginary_power(-0.5),
        ];
        for mult in &mults {
            for seed in 0..20u64 {
                let f = random_complex(spec.dim(), 100 + seed);
                let via_quad = apply_laplace_multiplier(&spec, mult, &f, &quad).unwrap();
                let via_oracle = multiplier_oracle(&spec, |z| mult.symbol(z), &f);
                let err =
                    norm_mu(&spec, &(via_quad - &via_oracle)) / norm_mu(&spec, &via_oracle);
                assert!(err <= 1e-4, "{}: seed {seed}, error {err:.3e}", mult.name);
            }
        }
    }

    #[test]
    fn indicator_symbol_complements_the_poisson_semigroup() {
        let spec = spectral(0.2, 12.0);
        let t_end = 1.7;
        let mult = MultiplierSpec::indicator(t_end).unwrap();
        let f = random_complex(spec.dim(), 8);
        let got = multiplier_oracle(&spec, |z| mult.symbol(z), &f);
        let semigroup = multiplier_oracle(
            &spec,
            |z| {
                if z > 0.0 {
                    Complex64::new((-t_end * z).exp(), 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            },
            &f,
        );
        let want = positive_part(&spec, &f) - semigroup;
        for (a, b) in got.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn table_profile_symbol_matches_its_quadrature() {
        let spec = spectral(0.2, 12.0);
        let quad = QuadratureSpec::default();
        let mult = MultiplierSpec::from_table(vec![
            (0.05, Complex64::new(1.0, 0.2)),
            (0.8, Complex64::new(0.3, -0.4)),
            (5.0, Complex64::new(-0.6, 0.0)),
        ])
        .unwrap();
        let f = random_complex(spec.dim(), 77);
        let via_quad = apply_laplace_multiplier(&spec, &mult, &f, &quad).unwrap();
        let via_oracle = multiplier_oracle(&spec, |z| mult.symbol(z), &f);
        let err = norm_mu(&spec, &(via_quad - &via_oracle)) / norm_mu(&spec, &via_oracle);
        assert!(err <= 1e-4, "error {err:.3e}");
        assert!((mult.c0 - (1.0f64 + 0.04).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn imaginary_power_is_isometric_on_positive_modes() {
        let spec = spectral(0.2, 12.0);
        let quad = QuadratureSpec::default();
        let f = random_complex(spec.dim(), 5);
        let powered = imaginary_power(&spec, 1.3, &f, ApplyRoute::Oracle, &quad).unwrap();
        let projected = positive_part(&spec, &f);
        let lhs = norm_mu(&spec, &powered);
        let rhs = norm_mu(&spec, &projected);
        assert!((lhs - rhs).abs() <= 1e-12 * rhs, "{lhs} vs {rhs}");
    }

    #[test]
    fn imaginary_power_at_zero_is_the_positive_projection() {
        let spec = spectral(0.2, 12.0);
        let quad = QuadratureSpec::default();
        let f = random_complex(spec.dim(), 6);
        let got = imaginary_power(&spec, 0.0, &f, ApplyRoute::Oracle, &quad).unwrap();
        let want = positive_part(&spec, &f);
        for (a, b) in got.iter().zip(want.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn opposite_imaginary_powers_compose_to_the_projection() {
        let spec = spectral(0.2, 12.0);
        let quad = QuadratureSpec::default();
        let s = 0.7;
        let f = random_complex(spec.dim(), 9);
        let want = positive_part(&spec, &f);

        let once = imaginary_power(&spec, s, &f, ApplyRoute::Oracle, &quad).unwrap();
        let back = imaginary_power(&spec, -s, &once, ApplyRoute::Oracle, &quad).unwrap();
        let err_oracle = norm_mu(&spec, &(back - &want)) / norm_mu(&spec, &want);
        assert!(err_oracle <= 1e-10, "oracle route error {err_oracle:.3e}");

        let once = imaginary_power(&spec, s, &f, ApplyRoute::Quadrature, &quad).unwrap();
        let back = imaginary_power(&spec, -s, &once, ApplyRoute::Quadrature, &quad).unwrap();
        let err_quad = norm_mu(&spec, &(back - &want)) / norm_mu(&spec, &want);
        assert!(err_quad <= 1e-4, "quadrature route error {err_quad:.3e}");
    }

    #[test]
    fn g_function_of_a_pure_mode_scales_its_profile() {
        let spec = spectral(0.2, 12.0);
        let quad = QuadratureSpec::default();
        for (kappa, j) in [(1u32, 3usize), (2, 10)] {
            let mode = spec.mode(j);
            let got = g_function(&spec, &mode, kappa, &quad).unwrap();
            let c = g_norm_constant(kappa);
            for (g, phi) in got.iter().zip(mode.iter()) {
                assert!(
                    (g - c * phi.abs()).abs() <= 1e-6 * c * phi.abs().max(1e-6),
                    "kappa {kappa}: {g} vs {}",
                    c * phi.abs()
                );
            }
        }
        assert!((g_norm_constant(1) - 0.5).abs() < 1e-15);
        assert!((g_norm_constant(2) - 6f64.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn g_function_kills_the_zero_mode() {
        let spec = spectral(0.2, 12.0);
        let quad = QuadratureSpec::default();
        let ones = DVector::from_element(spec.dim(), 1.0);
        let got = g_function(&spec, &ones, 1, &quad).unwrap();
        assert!(got.iter().all(|&v| v.abs() < 1e-10));
    }

    #[test]
    fn g_function_norm_identity_holds_for_random_data() {
        let spec = spectral(0.2, 12.0);
        let quad = QuadratureSpec::default();
        for kappa in [1u32, 2] {
            let mut rng = ChaCha8Rng::seed_from_u64(31 + kappa as u64);
            let f = DVector::from_fn(spec.dim(), |_, _| rng.gen::<f64>() - 0.5);
            let g = g_function(&spec, &f, kappa, &quad).unwrap();
            let g_norm: f64 = g
                .iter()
                .zip(spec.measures())
                .map(|(v, &mu)| mu * v * v)
                .sum::<f64>()
                .sqrt();
            let fc = f.map(|x| Complex64::new(x, 0.0));
            let projected = norm_mu(&spec, &positive_part(&spec, &fc));
            let want = g_norm_constant(kappa) * projected;
            assert!(
                (g_norm - want).abs() <= 1e-5 * want,
                "kappa {kappa}: {g_norm} vs {want}"
            );
        }
    }

    #[test]
    fn g_function_rejects_order_zero() {
        let spec = spectral(0.2, 12.0);
        let f = DVector::from_element(spec.dim(), 1.0);
        assert!(matches!(
            g_function(&spec, &f, 0, &QuadratureSpec::default()),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
