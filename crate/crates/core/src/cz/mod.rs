//! Real-variable tools on the discrete model: region splitting, maximal
//! operators, a dyadic stopping-time decomposition on end charts, a metric
//! covering of open site sets, and an empirical weak-type quasinorm.

use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, Region};
use nalgebra::DVector;

pub mod dyadic;
pub mod maximal;
pub mod weak;
pub mod whitney;

pub use dyadic::{cz_decompose, CubeClass, CzCube, CzDecomposition, DyadicGrid};
pub use maximal::{maximal_function, semigroup_maximal, MaximalKind};
pub use weak::{lambda_grid, weak_quasinorm, QuasinormRow, QuasinormSweep};
pub use whitney::{whitney_cover, WhitneyBall, WhitneyCover};

/// Splits a site function into its big-end, small-end, and center pieces.
/// The three pieces have disjoint supports and sum back to `f` exactly.
pub fn region_split(
    model: &ManifoldModel,
    f: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
    if f.len() != model.site_count() {
        return Err(Error::DimensionMismatch {
            expected: model.site_count(),
            got: f.len(),
        });
    }
    let mask = |region: Region| {
        DVector::from_fn(f.len(), |i, _| {
            if model.region(i) == region {
                f[i]
            } else {
                0.0
            }
        })
    };
    Ok((
        mask(Region::BigEnd),
        mask(Region::SmallEnd),
        mask(Region::Center),
    ))
}
