//! Maximal operators: metric ball averages and semigroup sups over grids.

use crate::error::{Error, Result};
use crate::geometry::ManifoldModel;
use crate::semigroup::ensure_sector;
use crate::spectral::SpectralData;
use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

/// Hardy-Littlewood maximal function: at each site, the largest mu-average
/// of |f| over any metric ball containing the site. Balls run over every
/// center and every radius in the center's distance row, which exhausts the
/// discrete family.
pub fn maximal_function(model: &ManifoldModel, f: &DVector<f64>) -> Result<DVector<f64>> {
    let n = model.site_count();
    if f.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: f.len(),
        });
    }
    let out = (0..n)
        .into_par_iter()
        .map(|y| {
            let row = model.distance_row(y);
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));

            // Cumulative averages by increasing radius; sites at tied
            // distance enter the ball together.
            let mut avgs = Vec::new();
            let mut group = vec![0usize; n];
            let (mut mass, mut num) = (0.0, 0.0);
            for i in 0..n {
                let z = order[i];
                mass += model.measure(z);
                num += f[z].abs() * model.measure(z);
                group[i] = avgs.len();
                if i + 1 == n || row[order[i + 1]] > row[z] {
                    avgs.push(num / mass);
                }
            }
            for g in (0..avgs.len().saturating_sub(1)).rev() {
                avgs[g] = avgs[g].max(avgs[g + 1]);
            }

            let mut best = vec![0.0; n];
            for i in 0..n {
                best[order[i]] = avgs[group[i]];
            }
            best
        })
        .reduce(
            || vec![0.0; n],
            |mut acc, contrib| {
                for (a, c) in acc.iter_mut().zip(contrib) {
                    *a = a.max(c);
                }
                acc
            },
        );
    Ok(DVector::from_vec(out))
}

/// Grid over which a semigroup maximal operator takes its sup.
#[derive(Debug, Clone)]
pub enum MaximalKind {
    /// `sup_t |e^{-tL} f|` over the listed times.
    Heat { times: Vec<f64> },
    /// `sup_z |(z sqrt L)^k e^{-z sqrt L} f|` over complex times in the
    /// sector `|arg z| < pi/4`.
    Poisson { order: u32, grid: Vec<Complex64> },
}

/// Pointwise sup of the semigroup family over the grid. Refining the grid
/// can only grow the result, since the sup runs over a superset.
pub fn semigroup_maximal(
    spec: &SpectralData,
    f: &DVector<f64>,
    kind: &MaximalKind,
) -> Result<DVector<f64>> {
    if f.len() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: f.len(),
        });
    }
    let mut out = DVector::zeros(spec.dim());
    match kind {
        MaximalKind::Heat { times } => {
            if times.is_empty() {
                return Err(Error::EmptyInput("maximal time grid".into()));
            }
            for &t in times {
                if !(t >= 0.0) || !t.is_finite() {
                    return Err(Error::invalid("times", "heat times must be nonnegative"));
                }
                let u = spec.apply_symbol(|l| (-t * l).exp(), f);
                for (o, v) in out.iter_mut().zip(u.iter()) {
                    *o = o.max(v.abs());
                }
            }
        }
        MaximalKind::Poisson { order, grid } => {
            if grid.is_empty() {
                return Err(Error::EmptyInput("maximal sector grid".into()));
            }
            for &z in grid {
                ensure_sector(z)?;
                let weight = |l: f64| {
                    let w = z * l.sqrt();
                    w.powu(*order) * (-w).exp()
                };
                let re = spec.apply_symbol(|l| weight(l).re, f);
                let im = spec.apply_symbol(|l| weight(l).im, f);
                for i in 0..out.len() {
                    out[i] = out[i].max(re[i].hypot(im[i]));
                }
            }
        }
    }
    Ok(out)
}
