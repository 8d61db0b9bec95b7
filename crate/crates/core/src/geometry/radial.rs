//! Radial-ray discretization: each end is the radial chart of a weighted
//! d-dimensional space, a half-line `(0, r_max]` with cell weight
//! `r^(d-1) h`, and the two charts are joined through a unit-weight center
//! segment. One weighted ray per end reproduces the volume exponents and the
//! hitting-probability decay `r^(2-d)` of the represented space at desk
//! scale, where a full product mesh cannot.

use super::{Edge, ModelParams, Region, Site};

struct Cell {
    region: Region,
    r: f64,
    len: f64,
    density: f64,
}

/// Cells of one end, innermost first: `(0, r_max]` split into equal cells.
fn end_cells(params: &ModelParams, region: Region) -> Vec<Cell> {
    let d = match region {
        Region::BigEnd => params.m,
        Region::SmallEnd => params.n,
        Region::Center => unreachable!(),
    } as i32;
    let count = (params.r_max / params.h).round().max(1.0) as usize;
    let len = params.r_max / count as f64;
    (0..count)
        .map(|j| {
            let r = (j as f64 + 0.5) * len;
            Cell {
                region,
                r,
                len,
                density: r.powi(d - 1),
            }
        })
        .collect()
}

fn center_cells(params: &ModelParams) -> Vec<Cell> {
    let count = (params.center_width / params.h).round().max(1.0) as usize;
    let len = params.center_width / count as f64;
    (0..count)
        .map(|j| {
            // Offset from the segment midpoint; both ends attach at the faces.
            let p = ((j as f64 + 0.5) * len - params.center_width / 2.0).abs();
            Cell {
                region: Region::Center,
                r: p,
                len,
                density: 1.0,
            }
        })
        .collect()
}

pub fn build(params: &ModelParams) -> (Vec<Site>, Vec<Edge>) {
    // Chain order: big end outermost-in, center, small end in-outermost.
    let mut cells = Vec::new();
    let mut big = end_cells(params, Region::BigEnd);
    big.reverse();
    cells.extend(big);
    cells.extend(center_cells(params));
    cells.extend(end_cells(params, Region::SmallEnd));

    let sites = cells
        .iter()
        .enumerate()
        .map(|(id, c)| Site {
            id,
            region: c.region,
            r: c.r,
            measure: c.density * c.len,
        })
        .collect();

    let edges = cells
        .windows(2)
        .enumerate()
        .map(|(i, pair)| {
            let length = 0.5 * (pair[0].len + pair[1].len);
            Edge {
                i,
                j: i + 1,
                conductance: (pair[0].density * pair[1].density).sqrt() / length,
                length,
            }
        })
        .collect();

    (sites, edges)
}

#[cfg(test)]
mod tests {
    use super::super::{ManifoldModel, ModelParams, Region};

    #[test]
    fn adjacent_end_sites_are_one_step_apart() {
        let model = ManifoldModel::build(ModelParams::radial(4, 3, 0.1, 20.0)).unwrap();
        let big: Vec<_> = model.sites_in(Region::BigEnd).collect();
        let d = model.distance(big[0].id, big[1].id);
        assert!((d - 0.1).abs() < 1e-12, "step {d}");
    }

    #[test]
    fn cross_end_distance_is_radii_plus_crossing() {
        let model = ManifoldModel::build(ModelParams::radial(4, 3, 0.1, 20.0)).unwrap();
        let x = nearest_r(&model, Region::BigEnd, 2.0);
        let y = nearest_r(&model, Region::SmallEnd, 3.0);
        let d = model.distance(x, y);
        let crossing = model.params().center_width;
        // Sites sit at cell midpoints, so allow one mesh step of slack.
        assert!(
            (d - (5.0 + crossing)).abs() <= model.params().h + 1e-9,
            "distance {d}"
        );
    }

    #[test]
    fn measures_follow_shell_weights() {
        let model = ManifoldModel::build(ModelParams::radial(4, 3, 0.1, 20.0)).unwrap();
        for s in model.sites() {
            let expect = match s.region {
                Region::BigEnd => s.r.powi(3) * 0.1,
                Region::SmallEnd => s.r.powi(2) * 0.1,
                Region::Center => 0.1,
            };
            assert!(
                (s.measure - expect).abs() < 1e-12 * expect.max(1.0),
                "site {} measure {} expected {expect}",
                s.id,
                s.measure
            );
            assert!(s.measure > 0.0);
        }
    }

    #[test]
    fn chain_distance_is_additive_along_rays() {
        let model = ManifoldModel::build(ModelParams::radial(5, 3, 0.1, 15.0)).unwrap();
        let a = nearest_r(&model, Region::BigEnd, 2.0);
        let b = nearest_r(&model, Region::BigEnd, 7.0);
        let d = model.distance(a, b);
        let expect = (model.sites()[b].r - model.sites()[a].r).abs();
        assert!((d - expect).abs() < 1e-9, "got {d}, expected {expect}");
    }

    fn nearest_r(model: &ManifoldModel, region: Region, r: f64) -> usize {
        model
            .sites_in(region)
            .min_by(|a, b| {
                (a.r - r)
                    .abs()
                    .partial_cmp(&(b.r - r).abs())
                    .unwrap()
            })
            .map(|s| s.id)
            .unwrap()
    }
}
