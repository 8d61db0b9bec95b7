//! Volume growth measurements exhibiting the non-doubling structure.
//!
//! Three ball families realize the three growth regimes on a radial model:
//! unit-scale balls at the big-end origin grow with exponent `m`; balls
//! inside the small end at scale comparable to the center distance grow with
//! exponent `n`; balls around a near-center point that swallow the center
//! and pour into the big end grow with exponent `m` again.

use super::{ManifoldModel, Region};
use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct VolumeRegressionPoint {
    pub radius: f64,
    pub volume: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RegimeFit {
    pub label: String,
    pub slope: f64,
    pub expected: f64,
    pub radius_range: (f64, f64),
    pub residual_rms: f64,
    pub points: Vec<VolumeRegressionPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VolumeReport {
    pub small_scale: RegimeFit,
    pub small_end: RegimeFit,
    pub engulfing: RegimeFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoublingWitness {
    pub max_ratio: f64,
    pub argmax_norm: f64,
    pub argmax_radius: f64,
}

const MIN_RADII: usize = 8;

fn log_spaced(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (llo + (lhi - llo) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn fit_slope(points: &[VolumeRegressionPoint]) -> (f64, f64) {
    let n = points.len() as f64;
    let us: Vec<f64> = points.iter().map(|p| p.radius.ln()).collect();
    let vs: Vec<f64> = points.iter().map(|p| p.volume.ln()).collect();
    let (ub, vb) = (us.iter().sum::<f64>() / n, vs.iter().sum::<f64>() / n);
    let sxy: f64 = us.iter().zip(&vs).map(|(u, v)| (u - ub) * (v - vb)).sum();
    let sxx: f64 = us.iter().map(|u| (u - ub) * (u - ub)).sum();
    let slope = sxy / sxx;
    let intercept = vb - slope * ub;
    let rss: f64 = us
        .iter()
        .zip(&vs)
        .map(|(u, v)| {
            let e = v - (intercept + slope * u);
            e * e
        })
        .sum();
    (slope, (rss / n).sqrt())
}

fn regime(
    label: &str,
    expected: f64,
    samples: Vec<VolumeRegressionPoint>,
) -> Result<RegimeFit> {
    if samples.len() < MIN_RADII {
        return Err(Error::InsufficientRange {
            context: label.to_string(),
            needed: MIN_RADII,
            got: samples.len(),
        });
    }
    let (slope, residual_rms) = fit_slope(&samples);
    Ok(RegimeFit {
        label: label.to_string(),
        slope,
        expected,
        radius_range: (samples[0].radius, samples[samples.len() - 1].radius),
        residual_rms,
        points: samples,
    })
}

fn innermost(model: &ManifoldModel, region: Region) -> usize {
    model
        .sites_in(region)
        .min_by(|a, b| a.r.partial_cmp(&b.r).unwrap())
        .map(|s| s.id)
        .unwrap()
}

pub fn growth_report(model: &ManifoldModel) -> Result<VolumeReport> {
    let p = model.params();
    if p.r_max < 20.0 {
        return Err(Error::invalid("r_max", "volume report needs r_max >= 20"));
    }
    let h = p.h;

    // Unit-scale balls at the big-end origin, restricted to the end so the
    // unit-weight center does not mask the power law.
    let origin = innermost(model, Region::BigEnd);
    let small_scale = regime(
        "unit-scale balls at the big-end origin",
        p.m as f64,
        log_spaced((5.0 * h).max(0.4), 1.0, 10)
            .into_iter()
            .map(|r| VolumeRegressionPoint {
                radius: r,
                volume: model.ball_volume_in(origin, r, Region::BigEnd),
            })
            .collect(),
    )?;

    // Balls inside the small end at half the center distance; both the
    // radius and the anchor sweep outward together.
    let hi = (0.62 * p.r_max).min(p.r_max / 1.55);
    let small_end = regime(
        "interior small-end balls at half the center distance",
        p.n as f64,
        log_spaced(2.5, hi, 12)
            .into_iter()
            .filter_map(|xi| {
                let x = nearest_chart(model, Region::SmallEnd, xi)?;
                let rad = model.sites()[x].r / 2.0;
                Some(VolumeRegressionPoint {
                    radius: rad,
                    volume: model.ball_volume(x, rad),
                })
            })
            .collect(),
    )?;

    // Balls centered just inside the small end, large enough to swallow the
    // center and run into the big end.
    let anchor = innermost(model, Region::SmallEnd);
    let engulfing = regime(
        "center-engulfing balls anchored in the small end",
        p.m as f64,
        log_spaced(8.0_f64.max(4.0 * model.norm_abs(anchor)), 0.95 * p.r_max, 12)
            .into_iter()
            .map(|r| VolumeRegressionPoint {
                radius: r,
                volume: model.ball_volume(anchor, r),
            })
            .collect(),
    )?;

    Ok(VolumeReport {
        small_scale,
        small_end,
        engulfing,
    })
}

fn nearest_chart(model: &ManifoldModel, region: Region, xi: f64) -> Option<usize> {
    model
        .sites_in(region)
        .min_by(|a, b| (a.r - xi).abs().partial_cmp(&(b.r - xi).abs()).unwrap())
        .map(|s| s.id)
}

/// Sweep doubling ratios `V(x, 2r) / V(x, r)` over small-end anchors; the
/// maximum grows with `r_max`, which is the failure of doubling.
pub fn doubling_witness(model: &ManifoldModel) -> DoublingWitness {
    let p = model.params();
    let mut best = DoublingWitness {
        max_ratio: 0.0,
        argmax_norm: 0.0,
        argmax_radius: 0.0,
    };
    for frac in [0.125, 0.25, 0.375] {
        let Some(x) = nearest_chart(model, Region::SmallEnd, frac * p.r_max) else {
            continue;
        };
        for r in log_spaced(0.5, 0.98 * p.r_max, 32) {
            let v1 = model.ball_volume(x, r);
            let v2 = model.ball_volume(x, 2.0 * r);
            if v1 > 0.0 {
                let ratio = v2 / v1;
                if ratio > best.max_ratio {
                    best = DoublingWitness {
                        max_ratio: ratio,
                        argmax_norm: model.norm_abs(x),
                        argmax_radius: r,
                    };
                }
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::super::{ManifoldModel, ModelParams, Region};

    fn canonical() -> ManifoldModel {
        ManifoldModel::build(ModelParams::radial(4, 3, 0.1, 40.0)).unwrap()
    }

    #[test]
    fn slopes_match_expected_exponents() {
        let report = canonical().volume_growth_report().unwrap();
        for fit in [&report.small_scale, &report.small_end, &report.engulfing] {
            assert!(fit.points.len() >= 8);
            let rel = (fit.slope - fit.expected).abs() / fit.expected;
            assert!(
                rel < 0.10,
                "{}: slope {} expected {}",
                fit.label,
                fit.slope,
                fit.expected
            );
        }
        assert!((report.small_scale.expected - 4.0).abs() < 1e-12);
        assert!((report.small_end.expected - 3.0).abs() < 1e-12);
    }

    #[test]
    fn small_end_slope_against_direct_sums() {
        // Independent recomputation of one sweep point by direct summation.
        let model = canonical();
        let x = model
            .sites_in(Region::SmallEnd)
            .min_by(|a, b| (a.r - 6.0).abs().partial_cmp(&(b.r - 6.0).abs()).unwrap())
            .unwrap()
            .id;
        let r = model.sites()[x].r / 2.0;
        let direct: f64 = (0..model.site_count())
            .filter(|&i| model.distance(x, i) <= r)
            .map(|i| model.measure(i))
            .sum();
        assert!((model.ball_volume(x, r) - direct).abs() < 1e-12 * direct);
    }

    #[test]
    fn ball_volume_monotone_and_saturating() {
        let model = ManifoldModel::build(ModelParams::radial(4, 3, 0.1, 20.0)).unwrap();
        let x = model.site_count() / 2;
        let mut prev = 0.0;
        for r in [0.01, 0.1, 1.0, 5.0, 20.0, 45.0] {
            let v = model.ball_volume(x, r);
            assert!(v >= prev);
            prev = v;
        }
        let total = model.total_measure();
        assert!((model.ball_volume(x, 2.0 * (20.0 + 1.0)) - total).abs() < 1e-12 * total);
        // Tiny balls see only the site itself.
        assert!((model.ball_volume(x, 0.04) - model.measure(x)).abs() < 1e-15);
    }

    #[test]
    fn center_ball_small_end_share_grows_cubically() {
        let model = canonical();
        let face = model
            .sites_in(Region::Center)
            .max_by(|a, b| a.id.cmp(&b.id))
            .unwrap()
            .id;
        let mut pts = Vec::new();
        for r in [2.0, 2.5, 3.2, 4.0, 5.0] {
            pts.push(super::VolumeRegressionPoint {
                radius: r,
                volume: model.ball_volume_in(face, r, Region::SmallEnd),
            });
        }
        let (slope, _) = super::fit_slope(&pts);
        assert!((slope - 3.0).abs() / 3.0 < 0.1, "slope {slope}");
    }

    #[test]
    fn doubling_ratio_grows_with_truncation_radius() {
        let small = ManifoldModel::build(ModelParams::radial(4, 3, 0.1, 20.0)).unwrap();
        let large = canonical();
        let a = small.doubling_witness();
        let b = large.doubling_witness();
        assert!(b.max_ratio > a.max_ratio, "{} vs {}", b.max_ratio, a.max_ratio);
        assert!(b.max_ratio > 16.0, "max ratio {}", b.max_ratio);
    }
}
