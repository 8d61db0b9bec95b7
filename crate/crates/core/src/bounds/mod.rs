//! Closed-form kernel envelopes on the two-end model.
//!
//! The heat kernel of the pure Laplacian follows a volume-normalized Gaussian
//! envelope at short times; at long times the envelope splits into six more
//! shapes indexed by which parts of the model the two sites occupy.  The
//! Poisson-type kernels follow polynomial-tail envelopes with no time split.
//! This module classifies (time, site, site) triples into those regimes,
//! evaluates the envelope shapes, fits envelope constants against computed
//! kernels, and runs the domination checks that tie the two kernel families
//! together.

mod domination;
mod fit;

pub use domination::{
    check_approx_identity, check_gaussian_type_domination, check_subordinated_poisson_domination,
    check_trotter, AlphaFit, ApproxIdentityReport, DominationReport, PoissonDominationReport,
    SubordinationEntry, TrotterReport, APPROX_IDENTITY_VARIATION_CAP,
};
pub use fit::{
    collect_heat_samples, collect_poisson_samples, fit_and_check_bounds, on_diagonal_slope,
    ratio_rows, stability_check, BoundFitReport, RatioRow, RegimeFit, RegimeSamples, Sample,
    SamplePlan, StabilityEntry, StabilityReport,
};

use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, Region};
use serde::Serialize;

/// Kernel family an envelope refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    Heat,
    Poisson,
}

impl KernelKind {
    pub fn label(self) -> &'static str {
        match self {
            KernelKind::Heat => "heat",
            KernelKind::Poisson => "poisson",
        }
    }
}

/// Side of a two-sided envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Upper,
    Lower,
}

/// Regime of one (time, site, site) triple.
///
/// Heat cases: 1 short time, any sites; 2 long time, both central; 3 long
/// time, big end against center; 4 long time, small end against center;
/// 5 long time, big end against small end; 6 long time, both big end;
/// 7 long time, both small end.  The short/long seam sits at `t = 1`.
///
/// Poisson cases carry no time split: 1 both central, 2 big end against
/// center, 3 small end against center, 4 big end against small end,
/// 5 both big end, 6 both small end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegimeTag {
    pub kind: KernelKind,
    pub case: u8,
    pub x_region: Region,
    pub y_region: Region,
    /// Heat only; always false for Poisson.
    pub large_time: bool,
}

impl RegimeTag {
    pub fn label(&self) -> String {
        format!(
            "{} case {} ({} vs {}{})",
            self.kind.label(),
            self.case,
            self.x_region.label(),
            self.y_region.label(),
            if self.kind == KernelKind::Heat {
                if self.large_time {
                    ", t > 1"
                } else {
                    ", t <= 1"
                }
            } else {
                ""
            }
        )
    }
}

/// Fitted or asserted envelope constants.
///
/// `c_lower` is present only for two-sided (heat) envelopes.  `c0` is the
/// Gaussian rate; the Poisson shapes have no rate parameter and ignore it.
/// `alpha` is a time dilation used by domination checks.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundConstants {
    pub c_upper: f64,
    pub c_lower: Option<f64>,
    pub c0: f64,
    pub alpha: f64,
}

impl BoundConstants {
    pub fn heat(c_upper: f64, c_lower: f64, c0: f64) -> Self {
        BoundConstants {
            c_upper,
            c_lower: Some(c_lower),
            c0,
            alpha: 1.0,
        }
    }

    pub fn poisson(c_upper: f64) -> Self {
        BoundConstants {
            c_upper,
            c_lower: None,
            c0: 1.0,
            alpha: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_upper > 0.0) || !self.c_upper.is_finite() {
            return Err(Error::invalid("c_upper", "must be positive and finite"));
        }
        if let Some(cl) = self.c_lower {
            if !(cl > 0.0) || !cl.is_finite() {
                return Err(Error::invalid("c_lower", "must be positive and finite"));
            }
        }
        if !(self.c0 > 0.0) || !self.c0.is_finite() {
            return Err(Error::invalid("c0", "must be positive and finite"));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::invalid("alpha", "must be positive and finite"));
        }
        Ok(())
    }
}

/// Tail exponent shift shared by all Poisson shapes: orders 0 and 1 use the
/// same exponent, exactly.
pub fn k_or_one(k: u32) -> u32 {
    k.max(1)
}

/// Classify a (time, site, site) triple.  Total over valid sites and
/// positive times, and symmetric in the pair: swapping the sites never
/// changes the case index.
pub fn classify_regime(
    model: &ManifoldModel,
    kind: KernelKind,
    t: f64,
    x: usize,
    y: usize,
) -> Result<RegimeTag> {
    model.check_site(x)?;
    model.check_site(y)?;
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::invalid("t", "time must be positive and finite"));
    }
    let rx = model.region(x);
    let ry = model.region(y);
    let (case, large_time) = match kind {
        KernelKind::Heat => {
            if t <= 1.0 {
                (1, false)
            } else {
                (heat_case_large(rx, ry), true)
            }
        }
        KernelKind::Poisson => (poisson_case(rx, ry), false),
    };
    Ok(RegimeTag {
        kind,
        case,
        x_region: rx,
        y_region: ry,
        large_time,
    })
}

fn heat_case_large(rx: Region, ry: Region) -> u8 {
    use Region::*;
    match (rx, ry) {
        (Center, Center) => 2,
        (BigEnd, Center) | (Center, BigEnd) => 3,
        (SmallEnd, Center) | (Center, SmallEnd) => 4,
        (BigEnd, SmallEnd) | (SmallEnd, BigEnd) => 5,
        (BigEnd, BigEnd) => 6,
        (SmallEnd, SmallEnd) => 7,
    }
}

fn poisson_case(rx: Region, ry: Region) -> u8 {
    use Region::*;
    match (rx, ry) {
        (Center, Center) => 1,
        (BigEnd, Center) | (Center, BigEnd) => 2,
        (SmallEnd, Center) | (Center, SmallEnd) => 3,
        (BigEnd, SmallEnd) | (SmallEnd, BigEnd) => 4,
        (BigEnd, BigEnd) => 5,
        (SmallEnd, SmallEnd) => 6,
    }
}

/// Scalar core of the heat envelope with unit constant.
///
/// Arguments are already canonicalized: for case 3 `nx` is the big-end
/// site's norm, for case 4 the small-end site's norm, for case 5 `nx` is the
/// big-end and `ny` the small-end norm.  `vol` is the geometric mean of the
/// two ball volumes at radius `sqrt t` and is read only by case 1.  Unused
/// norms may be any positive value.
pub fn heat_shape(
    m: u32,
    n: u32,
    c0: f64,
    case: u8,
    t: f64,
    d: f64,
    nx: f64,
    ny: f64,
    vol: f64,
) -> f64 {
    let mh = -(m as f64) / 2.0;
    let nh = -(n as f64) / 2.0;
    let gauss = (-c0 * d * d / t).exp();
    match case {
        1 => gauss / vol,
        2 => t.powf(nh) * gauss,
        3 => (t.powf(nh) * nx.powi(2 - m as i32) + t.powf(mh)) * gauss,
        4 => t.powf(nh) * (nx.powi(2 - n as i32) + 1.0) * gauss,
        5 => (t.powf(nh) * nx.powi(2 - m as i32) + t.powf(mh) * ny.powi(2 - n as i32)) * gauss,
        6 => {
            t.powf(nh) * (nx * ny).powi(2 - m as i32) * (-c0 * (nx * nx + ny * ny) / t).exp()
                + t.powf(mh) * gauss
        }
        7 => {
            t.powf(nh) * (nx * ny).powi(2 - n as i32) * (-c0 * (nx * nx + ny * ny) / t).exp()
                + t.powf(nh) * gauss
        }
        _ => panic!("heat envelope case must lie in 1..=7"),
    }
}

/// Scalar core of the Poisson envelope with unit constant.  Canonicalization
/// as in `heat_shape`: case 2 reads the big-end norm from `nx`, case 4 reads
/// the big-end norm from `nx` and the small-end norm from `ny`.
pub fn poisson_shape(m: u32, n: u32, k: u32, case: u8, t: f64, d: f64, nx: f64, ny: f64) -> f64 {
    let kv = k_or_one(k) as i32;
    let mi = m as i32;
    let ni = n as i32;
    let tm = t.powi(-mi);
    let tn = t.powi(-ni);
    let p = t / (t + d);
    let head = tm * p.powi(mi + kv);
    match case {
        1 | 3 | 6 => head + tn * p.powi(ni + kv),
        2 => head + tn * nx.powi(2 - mi) * p.powi(ni + kv),
        4 => {
            head + tn * nx.powi(2 - mi) * p.powi(ni + kv)
                + tm * ny.powi(2 - ni) * p.powi(mi + kv)
        }
        5 => head + tn * (nx * ny).powi(2 - mi) * (t / (t + nx + ny)).powi(ni + kv),
        _ => panic!("poisson envelope case must lie in 1..=6"),
    }
}

fn canonical_norms(model: &ManifoldModel, kind: KernelKind, case: u8, x: usize, y: usize) -> (f64, f64) {
    let pick = |r: Region| {
        if model.region(x) == r {
            model.norm_abs(x)
        } else {
            model.norm_abs(y)
        }
    };
    match (kind, case) {
        (KernelKind::Heat, 3) | (KernelKind::Poisson, 2) => (pick(Region::BigEnd), 1.0),
        (KernelKind::Heat, 4) => (pick(Region::SmallEnd), 1.0),
        (KernelKind::Heat, 5) | (KernelKind::Poisson, 4) => {
            (pick(Region::BigEnd), pick(Region::SmallEnd))
        }
        _ => (model.norm_abs(x), model.norm_abs(y)),
    }
}

/// Heat envelope shape with unit constant at a classified triple.  Case 1
/// normalizes by the geometric mean of the two ball volumes, which keeps the
/// shape symmetric like the kernel itself.  A one-sided normalization would
/// be equivalent on a space with locally comparable balls, but the radial
/// chart density vanishes toward each chart center, so adjacent sites there
/// carry ball volumes of very different size.
pub fn heat_shape_at(model: &ManifoldModel, c0: f64, t: f64, x: usize, y: usize) -> Result<f64> {
    let tag = classify_regime(model, KernelKind::Heat, t, x, y)?;
    let p = model.params();
    let d = model.distance(x, y);
    let (nx, ny) = canonical_norms(model, KernelKind::Heat, tag.case, x, y);
    let vol = if tag.case == 1 {
        (model.ball_volume(x, t.sqrt()) * model.ball_volume(y, t.sqrt())).sqrt()
    } else {
        1.0
    };
    Ok(heat_shape(p.m, p.n, c0, tag.case, t, d, nx, ny, vol))
}

/// Poisson envelope shape with unit constant at a classified triple.
pub fn poisson_shape_at(model: &ManifoldModel, k: u32, t: f64, x: usize, y: usize) -> Result<f64> {
    let tag = classify_regime(model, KernelKind::Poisson, t, x, y)?;
    let p = model.params();
    let d = model.distance(x, y);
    let (nx, ny) = canonical_norms(model, KernelKind::Poisson, tag.case, x, y);
    Ok(poisson_shape(p.m, p.n, k, tag.case, t, d, nx, ny))
}

/// Evaluate the heat envelope with constants on one side.
pub fn heat_bound_value(
    model: &ManifoldModel,
    consts: &BoundConstants,
    side: Side,
    t: f64,
    x: usize,
    y: usize,
) -> Result<f64> {
    consts.validate()?;
    let c = match side {
        Side::Upper => consts.c_upper,
        Side::Lower => consts
            .c_lower
            .ok_or_else(|| Error::invalid("c_lower", "lower constant missing"))?,
    };
    Ok(c * heat_shape_at(model, consts.c0, t, x, y)?)
}

/// Evaluate the Poisson envelope (upper side only).
pub fn poisson_bound_value(
    model: &ManifoldModel,
    consts: &BoundConstants,
    t: f64,
    k: u32,
    x: usize,
    y: usize,
) -> Result<f64> {
    consts.validate()?;
    Ok(consts.c_upper * poisson_shape_at(model, k, t, x, y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;

    fn model() -> ManifoldModel {
        ManifoldModel::build(ModelParams::radial(4, 3, 0.2, 12.0)).unwrap()
    }

    fn site(m: &ManifoldModel, region: Region, norm: f64) -> usize {
        m.site_at_norm(region, norm).unwrap()
    }

    #[test]
    fn classification_matches_the_case_list() {
        let m = model();
        let k1 = site(&m, Region::Center, 1.0);
        let k2 = m
            .sites_in(Region::Center)
            .map(|s| s.id)
            .find(|&i| i != k1)
            .unwrap();
        let big = site(&m, Region::BigEnd, 4.0);
        let small = site(&m, Region::SmallEnd, 3.0);

        let tag = classify_regime(&m, KernelKind::Heat, 2.0, k1, k2).unwrap();
        assert_eq!(tag.case, 2);
        assert!(tag.large_time);
        let tag = classify_regime(&m, KernelKind::Heat, 2.0, big, small).unwrap();
        assert_eq!(tag.case, 5);
        let tag = classify_regime(&m, KernelKind::Poisson, 2.0, big, small).unwrap();
        assert_eq!(tag.case, 4);
        assert!(!tag.large_time);
        let tag = classify_regime(&m, KernelKind::Heat, 0.5, big, small).unwrap();
        assert_eq!(tag.case, 1);
        let tag = classify_regime(&m, KernelKind::Heat, 5.0, small, k1).unwrap();
        assert_eq!(tag.case, 4);
        let tag = classify_regime(&m, KernelKind::Heat, 5.0, big, k1).unwrap();
        assert_eq!(tag.case, 3);
        let tag = classify_regime(&m, KernelKind::Heat, 5.0, big, big).unwrap();
        assert_eq!(tag.case, 6);
        let tag = classify_regime(&m, KernelKind::Heat, 5.0, small, small).unwrap();
        assert_eq!(tag.case, 7);
    }

    #[test]
    fn classification_is_total_and_swap_invariant() {
        let m = model();
        let reps = [
            site(&m, Region::Center, 1.0),
            site(&m, Region::BigEnd, 3.0),
            site(&m, Region::SmallEnd, 5.0),
        ];
        for &x in &reps {
            for &y in &reps {
                for &t in &[0.3, 1.0, 7.0] {
                    for kind in [KernelKind::Heat, KernelKind::Poisson] {
                        let a = classify_regime(&m, kind, t, x, y).unwrap();
                        let b = classify_regime(&m, kind, t, y, x).unwrap();
                        assert_eq!(a.case, b.case);
                        assert!((1..=7).contains(&a.case));
                    }
                }
            }
        }
    }

    #[test]
    fn poisson_orders_zero_and_one_share_the_exponent() {
        for case in 1..=6u8 {
            for &(t, d, nx, ny) in &[(0.7, 3.0, 4.0, 2.0), (2.0, 0.5, 1.5, 9.0)] {
                let a = poisson_shape(4, 3, 0, case, t, d, nx, ny);
                let b = poisson_shape(4, 3, 1, case, t, d, nx, ny);
                assert_eq!(a, b);
                let c = poisson_shape(4, 3, 2, case, t, d, nx, ny);
                assert_ne!(a, c);
            }
        }
    }

    #[test]
    fn poisson_case_one_on_diagonal_is_sum_of_powers() {
        let m = model();
        let k1 = site(&m, Region::Center, 1.0);
        let consts = BoundConstants::poisson(1.0);
        for &t in &[0.5, 1.0, 3.0] {
            let v = poisson_bound_value(&m, &consts, t, 0, k1, k1).unwrap();
            let expect = t.powi(-4) + t.powi(-3);
            assert!((v - expect).abs() <= 1e-14 * expect);
        }
    }

    #[test]
    fn heat_case_one_on_diagonal_is_inverse_ball_volume() {
        let m = model();
        let x = site(&m, Region::BigEnd, 3.0);
        let consts = BoundConstants::heat(1.0, 0.5, 0.4);
        let t = 0.5;
        let v = heat_bound_value(&m, &consts, Side::Upper, t, x, x).unwrap();
        let expect = 1.0 / m.ball_volume(x, t.sqrt());
        assert!((v - expect).abs() <= 1e-14 * expect);
        let lo = heat_bound_value(&m, &consts, Side::Lower, t, x, x).unwrap();
        assert!((lo - 0.5 * expect).abs() <= 1e-14 * expect);
    }

    #[test]
    fn heat_shape_is_nonincreasing_in_distance() {
        for case in [1u8, 2, 3, 4, 5, 6, 7] {
            let mut prev = f64::INFINITY;
            for step in 0..30 {
                let d = 0.3 * step as f64;
                let v = heat_shape(4, 3, 0.25, case, 2.0, d, 4.0, 3.0, 1.0);
                assert!(v <= prev * (1.0 + 1e-15), "case {case} rose at d = {d}");
                prev = v;
            }
        }
    }

    #[test]
    fn poisson_three_term_case_matches_a_literal_recomputation() {
        // Case 4 at t = 1, |x| = 5, |y| = 3, d = 8, order k = 2, written out
        // term by term with independent arithmetic.
        let m = 4u32;
        let n = 3u32;
        let (t, d, nx, ny) = (1.0f64, 8.0f64, 5.0f64, 3.0f64);
        let got = poisson_shape(m, n, 2, 4, t, d, nx, ny);

        let kv = 2.0f64;
        let term1 = (1.0 / t.powf(4.0)) * (t / (t + d)).powf(4.0 + kv);
        let term2 = (1.0 / (t.powf(3.0) * nx.powf(2.0))) * (t / (t + d)).powf(3.0 + kv);
        let term3 = (1.0 / (t.powf(4.0) * ny.powf(1.0))) * (t / (t + d)).powf(4.0 + kv);
        let expect = term1 + term2 + term3;
        assert!((got - expect).abs() <= 1e-15 * expect);
    }

    #[test]
    fn swapped_mixed_pairs_canonicalize_to_the_same_value() {
        let m = model();
        let big = site(&m, Region::BigEnd, 4.0);
        let small = site(&m, Region::SmallEnd, 2.5);
        let k1 = site(&m, Region::Center, 1.0);
        let hc = BoundConstants::heat(2.0, 0.5, 0.3);
        for &(a, b, t) in &[(big, small, 3.0), (big, k1, 3.0), (small, k1, 3.0)] {
            let u = heat_bound_value(&m, &hc, Side::Upper, t, a, b).unwrap();
            let v = heat_bound_value(&m, &hc, Side::Upper, t, b, a).unwrap();
            assert!((u - v).abs() <= 1e-15 * u.abs());
        }
        let pc = BoundConstants::poisson(1.0);
        for &(a, b) in &[(big, small), (big, k1), (small, k1)] {
            let u = poisson_bound_value(&m, &pc, 1.5, 1, a, b).unwrap();
            let v = poisson_bound_value(&m, &pc, 1.5, 1, b, a).unwrap();
            assert!((u - v).abs() <= 1e-15 * u.abs());
        }
    }

    #[test]
    fn constants_are_validated() {
        let m = model();
        let x = site(&m, Region::BigEnd, 3.0);
        let bad = BoundConstants {
            c_upper: -1.0,
            c_lower: None,
            c0: 0.3,
            alpha: 1.0,
        };
        assert!(poisson_bound_value(&m, &bad, 1.0, 0, x, x).is_err());
        let no_lower = BoundConstants::poisson(1.0);
        assert!(heat_bound_value(&m, &no_lower, Side::Lower, 1.0, x, x).is_err());
    }
}
