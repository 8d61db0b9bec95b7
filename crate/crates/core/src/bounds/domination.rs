//! Domination checks between kernels and their envelopes.
//!
//! Three families of checks live here.  Entrywise comparison of the heat
//! kernel with and without a nonnegative potential (the damped kernel never
//! exceeds the free one).  Gaussian-type domination of one heat kernel by a
//! time-dilated other, scanned over a dilation grid.  And the subordination
//! route: a Poisson-kernel majorant assembled by integrating the fitted heat
//! envelope, which must sit above the computed Poisson kernel values.

use super::{heat_shape_at, poisson_shape_at, BoundConstants};
use crate::error::{Error, Result};
use crate::geometry::ManifoldModel;
use crate::semigroup::{
    heat_kernel, hermite_envelope_constant, poisson_kernel_spectral,
    poisson_upper_via_heat_piecewise, KernelMatrix, QuadratureSpec,
};
use crate::spectral::SpectralData;
use serde::Serialize;

/// Entrywise comparison of a damped heat kernel against the free one.
#[derive(Debug, Clone, Serialize)]
pub struct TrotterReport {
    pub time: f64,
    /// Largest value of damped minus free; at or below zero means clean
    /// domination.
    pub max_excess: f64,
    pub violations: usize,
    /// Entry attaining `max_excess`.
    pub worst: Option<(usize, usize)>,
}

/// Check that the damped kernel stays below the free kernel entrywise, up to
/// `tol`.  A failure here signals an assembly bug, not an analysis gap.
pub fn check_trotter(
    damped: &KernelMatrix<f64>,
    free: &KernelMatrix<f64>,
    tol: f64,
) -> Result<TrotterReport> {
    if damped.values.shape() != free.values.shape() {
        return Err(Error::DimensionMismatch {
            expected: free.values.nrows(),
            got: damped.values.nrows(),
        });
    }
    let (n, _) = damped.values.shape();
    let mut max_excess = f64::NEG_INFINITY;
    let mut worst = None;
    let mut violations = 0usize;
    for i in 0..n {
        for j in 0..n {
            let excess = damped.values[(i, j)] - free.values[(i, j)];
            if excess > max_excess {
                max_excess = excess;
                worst = Some((i, j));
            }
            if excess > tol {
                violations += 1;
            }
        }
    }
    Ok(TrotterReport {
        time: damped.time,
        max_excess,
        violations,
        worst,
    })
}

/// Smallest constant achieving domination at one time dilation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AlphaFit {
    pub alpha: f64,
    pub c: f64,
    /// Entries skipped because the dilated kernel sat below the noise floor
    /// there; ratios against such denominators measure spectral roundoff,
    /// not kernel shape.
    pub excluded: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct DominationReport {
    pub trotter: Vec<TrotterReport>,
    pub fits: Vec<AlphaFit>,
}

const TROTTER_TOL: f64 = 1e-10;
const NOISE_FLOOR_FRAC: f64 = 1e-8;

/// Gaussian-type domination of the damped heat kernel by the free one: for
/// each dilation `alpha` on the grid, report the smallest `C` with
/// `damped_t <= C free_{alpha t}` over the sampled times and all entries.
/// Also runs the entrywise Trotter comparison at each sampled time.
pub fn check_gaussian_type_domination(
    damped: &SpectralData,
    free: &SpectralData,
    alpha_grid: &[f64],
    t_grid: &[f64],
) -> Result<DominationReport> {
    if damped.dim() != free.dim() {
        return Err(Error::DimensionMismatch {
            expected: free.dim(),
            got: damped.dim(),
        });
    }
    if alpha_grid.is_empty() || t_grid.is_empty() {
        return Err(Error::EmptyInput("alpha and time grids".into()));
    }
    let mut trotter = Vec::new();
    let mut fits: Vec<AlphaFit> = alpha_grid
        .iter()
        .map(|&alpha| AlphaFit {
            alpha,
            c: 0.0,
            excluded: 0,
        })
        .collect();
    for &t in t_grid {
        let hv = heat_kernel(damped, t)?;
        let h_free = heat_kernel(free, t)?;
        trotter.push(check_trotter(&hv, &h_free, TROTTER_TOL)?);
        for fit in fits.iter_mut() {
            let dilated = if fit.alpha == 1.0 {
                h_free.clone()
            } else {
                heat_kernel(free, fit.alpha * t)?
            };
            let floor = NOISE_FLOOR_FRAC * dilated.max_abs();
            let (n, _) = dilated.values.shape();
            for i in 0..n {
                for j in 0..n {
                    let denom = dilated.values[(i, j)];
                    if denom <= floor {
                        fit.excluded += 1;
                        continue;
                    }
                    let r = hv.values[(i, j)] / denom;
                    if r > fit.c {
                        fit.c = r;
                    }
                }
            }
        }
    }
    Ok(DominationReport { trotter, fits })
}

/// One comparison of a computed Poisson kernel value against the majorant
/// integrated from the heat envelope.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SubordinationEntry {
    pub k: u32,
    pub t: f64,
    pub x: usize,
    pub y: usize,
    pub p_abs: f64,
    pub majorant: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonDominationReport {
    pub entries: Vec<SubordinationEntry>,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Verify that Poisson kernel values are dominated by the majorant obtained
/// by pushing the fitted heat envelope through the subordination integral.
/// The envelope constants must be an upper fit for this model's heat kernel
/// over the effective integration range; the check reports the worst
/// kernel/majorant ratio, which should stay at or below one.
pub fn check_subordinated_poisson_domination(
    spec: &SpectralData,
    heat_consts: &BoundConstants,
    ks: &[u32],
    ts: &[f64],
    pairs: &[(usize, usize)],
    quad: &QuadratureSpec,
) -> Result<PoissonDominationReport> {
    heat_consts.validate()?;
    if ks.is_empty() || ts.is_empty() || pairs.is_empty() {
        return Err(Error::EmptyInput("orders, times, and pairs".into()));
    }
    let model = spec.model().as_ref();
    let mut entries = Vec::new();
    let mut max_ratio = 0.0f64;
    for &k in ks {
        let envelope_c = hermite_envelope_constant(k as usize + 1);
        for &t in ts {
            let p_kernel = poisson_kernel_spectral(spec, t, k as usize)?;
            for &(x, y) in pairs {
                model.check_site(x)?;
                model.check_site(y)?;
                let bound = |v: f64| {
                    heat_consts.c_upper
                        * heat_shape_at(model, heat_consts.c0, v, x, y).unwrap_or(f64::NAN)
                };
                // The envelope switches branch at v = 1, and below that it
                // tracks the discrete ball volumes at both sites, which step
                // each time sqrt(v) crosses a site distance. Integrating
                // between consecutive discontinuities keeps every piece
                // smooth.
                let mut breaks: Vec<f64> = vec![1.0];
                for row in [model.distance_row(x), model.distance_row(y)] {
                    for d in row {
                        let v = d * d;
                        if v > 0.0 && v < 1.0 {
                            breaks.push(v);
                        }
                    }
                }
                let majorant = poisson_upper_via_heat_piecewise(
                    bound,
                    envelope_c,
                    t,
                    k as usize,
                    &breaks,
                    spec.lambda_min_positive(),
                    quad,
                )?;
                let p_abs = p_kernel.values[(x, y)].abs();
                let ratio = p_abs / majorant;
                if ratio > max_ratio {
                    max_ratio = ratio;
                }
                entries.push(SubordinationEntry {
                    k,
                    t,
                    x,
                    y,
                    p_abs,
                    majorant,
                    ratio,
                });
            }
        }
    }
    Ok(PoissonDominationReport {
        entries,
        max_ratio,
        pass: max_ratio <= 1.0,
    })
}

/// Outcome of testing a kernel family against the Poisson envelope along a
/// time grid.
#[derive(Debug, Clone, Serialize)]
pub struct ApproxIdentityReport {
    pub alpha: f64,
    pub k: u32,
    /// Worst kernel/envelope ratio at each sampled time.
    pub per_t: Vec<(f64, f64)>,
    /// Smallest constant achieving domination over the whole grid.
    pub c_fit: f64,
    /// Spread of the per-time worst ratios; a scaling mismatch shows up as
    /// divergence here.
    pub variation: f64,
    pub pass: bool,
}

/// Largest admissible spread of per-time ratios before a family is declared
/// wrongly scaled.
pub const APPROX_IDENTITY_VARIATION_CAP: f64 = 1e4;

/// Check whether a kernel family behaves like an approximation to the
/// identity: each member must be dominated by the Poisson envelope at the
/// dilated time, with a constant that stays of one order of magnitude along
/// the whole grid.
pub fn check_approx_identity(
    family: &dyn Fn(f64) -> Result<KernelMatrix<f64>>,
    model: &ManifoldModel,
    k: u32,
    alpha: f64,
    t_grid: &[f64],
) -> Result<ApproxIdentityReport> {
    if t_grid.is_empty() {
        return Err(Error::EmptyInput("time grid".into()));
    }
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("alpha", "must be positive and finite"));
    }
    let n = model.site_count();
    let mut per_t = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let kernel = family(t)?;
        if kernel.values.nrows() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: kernel.values.nrows(),
            });
        }
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                let shape = poisson_shape_at(model, k, alpha * t, x, y)?;
                let r = kernel.values[(x, y)].abs() / shape;
                if r > worst {
                    worst = r;
                }
            }
        }
        per_t.push((t, worst));
    }
    let c_fit = per_t.iter().map(|p| p.1).fold(0.0f64, f64::max);
    let least = per_t.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let variation = if least > 0.0 { c_fit / least } else { f64::INFINITY };
    let pass = c_fit.is_finite() && variation <= APPROX_IDENTITY_VARIATION_CAP;
    Ok(ApproxIdentityReport {
        alpha,
        k,
        per_t,
        c_fit,
        variation,
        pass,
    })
}
