//! Dyadic stopping-time decomposition on an end's radial chart.
//!
//! The chart origin sits at the boundary with the center region, and cubes
//! are the half-open intervals `[a 2^k, (a+1) 2^k)`. Whether a cube touches
//! the origin matters: an interior cube spans coordinates within a factor of
//! two, while an origin cube sees the full density swing of the end, so the
//! two classes obey different average bounds and are reported separately.

use crate::error::{Error, Result};
use crate::geometry::{ManifoldModel, MeshMode, Region};
use nalgebra::DVector;
use serde::Serialize;

/// Dyadic interval structure on one end's radial coordinate line, with a
/// single top cube `[0, 2^top)` covering the whole chart.
#[derive(Debug, Clone)]
pub struct DyadicGrid {
    region: Region,
    total_sites: usize,
    on_chart: Vec<bool>,
    ids: Vec<usize>,
    coords: Vec<f64>,
    weights: Vec<f64>,
    top: i32,
}

impl DyadicGrid {
    pub fn new(model: &ManifoldModel, region: Region) -> Result<Self> {
        if model.params().mode != MeshMode::RadialRay {
            return Err(Error::Unsupported(
                "dyadic charts need the radial mesh; the product lattice keeps only site norms"
                    .into(),
            ));
        }
        if region == Region::Center {
            return Err(Error::invalid(
                "region",
                "dyadic charts live on the end coordinate lines",
            ));
        }
        let mut sites: Vec<(usize, f64, f64)> = model
            .sites()
            .iter()
            .filter(|s| s.region == region)
            .map(|s| (s.id, s.r, s.measure))
            .collect();
        if sites.is_empty() {
            return Err(Error::EmptyInput("chart has no sites".into()));
        }
        sites.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut on_chart = vec![false; model.site_count()];
        for &(id, _, _) in &sites {
            on_chart[id] = true;
        }
        let max_coord = sites.last().unwrap().1;
        let mut top = 0;
        while (top as f64).exp2() <= max_coord {
            top += 1;
        }
        Ok(DyadicGrid {
            region,
            total_sites: model.site_count(),
            on_chart,
            ids: sites.iter().map(|s| s.0).collect(),
            coords: sites.iter().map(|s| s.1).collect(),
            weights: sites.iter().map(|s| s.2).collect(),
            top,
        })
    }

    pub fn region(&self) -> Region {
        self.region
    }

    /// Number of chart sites.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Level of the top cube; its side is `2^top_level()`.
    pub fn top_level(&self) -> i32 {
        self.top
    }

    /// Model ids of the chart sites in increasing radial coordinate.
    pub fn site_ids(&self) -> &[usize] {
        &self.ids
    }

    /// Index of the generation-`level` cube containing a coordinate.
    pub fn cube_of(coord: f64, level: i32) -> u64 {
        (coord / (level as f64).exp2()).floor() as u64
    }
}

/// Cube classification by position: interior cubes keep their coordinates
/// within a factor of two, origin cubes touch the chart origin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CubeClass {
    Interior,
    OriginCorner,
}

#[derive(Debug, Clone, Serialize)]
pub struct CzCube {
    /// Half-open coordinate interval `[lo, hi)`.
    pub lo: f64,
    pub hi: f64,
    pub side: f64,
    pub level: i32,
    pub class: CubeClass,
    /// Model ids of the sites inside.
    pub sites: Vec<usize>,
    /// mu-measure of the cube.
    pub measure: f64,
    /// mu-average of |f| over the cube at selection time.
    pub avg_abs: f64,
}

#[derive(Debug, Clone)]
pub struct BadPart {
    pub cube: CzCube,
    /// Full-length site vector supported in the cube, mean zero against mu.
    pub values: DVector<f64>,
}

/// Stopping-time decomposition `f = good + sum of bad parts`: the good part
/// agrees with `f` off the selected cubes and with the cube average on them,
/// so each bad part has mean zero and the good part is bounded.
#[derive(Debug, Clone)]
pub struct CzDecomposition {
    pub lambda: f64,
    pub good: DVector<f64>,
    pub bad: Vec<BadPart>,
}

impl CzDecomposition {
    pub fn reconstruct(&self) -> DVector<f64> {
        let mut out = self.good.clone();
        for part in &self.bad {
            out += &part.values;
        }
        out
    }

    /// Total mu-measure of the selected cubes.
    pub fn bad_measure(&self) -> f64 {
        self.bad.iter().map(|p| p.cube.measure).sum()
    }

    /// JSON record of the selected cubes: intervals, sides, classifications.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            lambda: f64,
            bad_measure: f64,
            cubes: Vec<&'a CzCube>,
        }
        serde_json::to_string_pretty(&Summary {
            lambda: self.lambda,
            bad_measure: self.bad_measure(),
            cubes: self.bad.iter().map(|p| &p.cube).collect(),
        })
        .expect("cube records serialize")
    }
}

/// Runs the stopping-time subdivision at threshold `lambda` on a function
/// supported on the grid's chart. Starting from the top cube, a cube whose
/// mu-average of |f| exceeds `lambda` is selected whole; otherwise it is
/// split in half and the halves are examined, down to single sites. The top
/// cube itself must average at most `lambda`, which is the usual entry
/// condition: the chart must carry measure at least `||f||_1 / lambda`.
pub fn cz_decompose(
    grid: &DyadicGrid,
    f: &DVector<f64>,
    lambda: f64,
) -> Result<CzDecomposition> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::invalid("lambda", "threshold must be positive"));
    }
    if f.len() != grid.total_sites {
        return Err(Error::DimensionMismatch {
            expected: grid.total_sites,
            got: f.len(),
        });
    }
    if let Some(off) = (0..f.len()).find(|&i| !grid.on_chart[i] && f[i] != 0.0) {
        return Err(Error::invalid(
            "f",
            format!("must vanish off the chart, but site {off} is {}", f[off]),
        ));
    }

    let n = grid.len();
    let vals: Vec<f64> = grid.ids.iter().map(|&id| f[id]).collect();
    let mut pref_mass = vec![0.0; n + 1];
    let mut pref_f = vec![0.0; n + 1];
    let mut pref_abs = vec![0.0; n + 1];
    for i in 0..n {
        pref_mass[i + 1] = pref_mass[i] + grid.weights[i];
        pref_f[i + 1] = pref_f[i] + grid.weights[i] * vals[i];
        pref_abs[i + 1] = pref_abs[i] + grid.weights[i] * vals[i].abs();
    }
    let avg_abs = |lo: usize, hi: usize| (pref_abs[hi] - pref_abs[lo]) / (pref_mass[hi] - pref_mass[lo]);

    if avg_abs(0, n) > lambda {
        return Err(Error::invalid(
            "lambda",
            format!(
                "top cube already averages {:.3e} > lambda; the chart needs measure at least ||f||_1 / lambda",
                avg_abs(0, n)
            ),
        ));
    }

    // Depth-first subdivision; selected cubes come out ordered by coordinate.
    let mut selected: Vec<(i32, u64, usize, usize)> = Vec::new();
    let mut stack = vec![(grid.top, 0u64, 0usize, n)];
    while let Some((level, a, lo, hi)) = stack.pop() {
        if lo == hi {
            continue;
        }
        if avg_abs(lo, hi) > lambda {
            selected.push((level, a, lo, hi));
            continue;
        }
        if hi - lo == 1 {
            continue;
        }
        let mid = (2 * a + 1) as f64 * ((level - 1) as f64).exp2();
        let split = lo + grid.coords[lo..hi].partition_point(|&c| c < mid);
        stack.push((level - 1, 2 * a + 1, split, hi));
        stack.push((level - 1, 2 * a, lo, split));
    }
    selected.sort_by_key(|&(_, _, lo, _)| lo);

    let mut good = f.clone();
    let mut bad = Vec::with_capacity(selected.len());
    for (level, a, lo, hi) in selected {
        let side = (level as f64).exp2();
        let measure = pref_mass[hi] - pref_mass[lo];
        let mean = (pref_f[hi] - pref_f[lo]) / measure;
        let mut values = DVector::zeros(grid.total_sites);
        for i in lo..hi {
            values[grid.ids[i]] = vals[i] - mean;
            good[grid.ids[i]] = mean;
        }
        bad.push(BadPart {
            cube: CzCube {
                lo: a as f64 * side,
                hi: (a + 1) as f64 * side,
                side,
                level,
                class: if a == 0 {
                    CubeClass::OriginCorner
                } else {
                    CubeClass::Interior
                },
                sites: grid.ids[lo..hi].to_vec(),
                measure,
                avg_abs: avg_abs(lo, hi),
            },
            values,
        });
    }
    Ok(CzDecomposition { lambda, good, bad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ModelParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn model() -> ManifoldModel {
        ManifoldModel::build(ModelParams::radial(4, 3, 0.25, 16.0)).unwrap()
    }

    fn chart_l1(grid: &DyadicGrid, f: &DVector<f64>) -> f64 {
        grid.ids
            .iter()
            .zip(&grid.weights)
            .map(|(&id, w)| f[id].abs() * w)
            .sum()
    }

    /// Signed values with a heavy spread, so averages genuinely vary from
    /// cube to cube and the stopping rule bites at several depths.
    fn random_chart_fn(grid: &DyadicGrid, n: usize, seed: u64) -> DVector<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = DVector::zeros(n);
        for &id in &grid.ids {
            f[id] = rng.gen_range(-1.0..1.0) * (4.0 * rng.gen_range(0.0..1.0)).exp();
        }
        f
    }

    /// Every cube with average above lambda whose strict ancestors all stay
    /// at or below it, found by scanning all generations directly.
    fn brute_force_selection(grid: &DyadicGrid, f: &DVector<f64>, lambda: f64) -> Vec<(i32, u64)> {
        let avg = |level: i32, a: u64| -> f64 {
            let side = (level as f64).exp2();
            let (lo, hi) = (a as f64 * side, (a + 1) as f64 * side);
            let mut mass = 0.0;
            let mut sum = 0.0;
            for (i, &c) in grid.coords.iter().enumerate() {
                if c >= lo && c < hi {
                    mass += grid.weights[i];
                    sum += grid.weights[i] * f[grid.ids[i]].abs();
                }
            }
            if mass > 0.0 {
                sum / mass
            } else {
                0.0
            }
        };
        let mut out = Vec::new();
        for level in (-4..grid.top).rev() {
            for a in 0..(1u64 << (grid.top - level)) {
                if avg(level, a) > lambda
                    && (1..=grid.top - level).all(|up| avg(level + up, a >> up) <= lambda)
                {
                    out.push((level, a));
                }
            }
        }
        out.sort_unstable();
        out
    }

    #[test]
    fn below_threshold_nothing_is_selected() {
        let model = model();
        let grid = DyadicGrid::new(&model, Region::BigEnd).unwrap();
        let f = random_chart_fn(&grid, model.site_count(), 5);
        let dec = cz_decompose(&grid, &f, 1.01 * f.amax()).unwrap();
        assert!(dec.bad.is_empty());
        assert_eq!(dec.good, f);
    }

    #[test]
    fn block_function_selects_its_maximal_ancestor() {
        let model = model();
        let grid = DyadicGrid::new(&model, Region::BigEnd).unwrap();
        // 20 on the dyadic interval [4, 6), zero elsewhere. The interval's
        // own average is 20, but so are its ancestors' averages divided by
        // their mass ratios, and the stopping rule must take the largest
        // cube that breaks the threshold, not the block itself.
        let mut f = DVector::zeros(model.site_count());
        for (i, &c) in grid.coords.iter().enumerate() {
            if (4.0..6.0).contains(&c) {
                f[grid.ids[i]] = 20.0;
            }
        }
        let dec = cz_decompose(&grid, &f, 1.0).unwrap();
        let got: Vec<(i32, f64)> = dec.bad.iter().map(|p| (p.cube.level, p.cube.lo)).collect();
        let brute: Vec<(i32, f64)> = brute_force_selection(&grid, &f, 1.0)
            .into_iter()
            .map(|(level, a)| (level, a as f64 * (level as f64).exp2()))
            .collect();
        assert_eq!(got, brute);
        assert_eq!(got.len(), 1);
        let top = &dec.bad[0].cube;
        assert!(top.lo <= 4.0 && top.hi >= 6.0, "selected {top:?}");
        assert!(top.side > 2.0, "a strict ancestor, not the block itself");
    }

    #[test]
    fn selection_matches_the_brute_force_stopping_tree() {
        let model = model();
        for region in [Region::BigEnd, Region::SmallEnd] {
            let grid = DyadicGrid::new(&model, region).unwrap();
            for seed in [11, 12, 13] {
                let f = random_chart_fn(&grid, model.site_count(), seed);
                let lambda = 1.5 * chart_l1(&grid, &f)
                    / grid.weights.iter().sum::<f64>();
                let dec = cz_decompose(&grid, &f, lambda).unwrap();
                let mut got: Vec<(i32, u64)> = dec
                    .bad
                    .iter()
                    .map(|p| (p.cube.level, (p.cube.lo / p.cube.side) as u64))
                    .collect();
                got.sort_unstable();
                assert_eq!(got, brute_force_selection(&grid, &f, lambda));
                assert!(!dec.bad.is_empty(), "threshold should bite somewhere");
            }
        }
    }

    #[test]
    fn decomposition_invariants_hold_on_random_functions() {
        let model = model();
        let m = model.params().m as i32;
        for region in [Region::BigEnd, Region::SmallEnd] {
            let grid = DyadicGrid::new(&model, region).unwrap();
            for seed in [21, 22, 23] {
                let f = random_chart_fn(&grid, model.site_count(), seed);
                let l1 = chart_l1(&grid, &f);
                let top_avg = l1 / grid.weights.iter().sum::<f64>();
                for mult in [1.0, 1.5, 3.0] {
                    let lambda = mult * top_avg;
                    let dec = cz_decompose(&grid, &f, lambda).unwrap();

                    let recon = dec.reconstruct();
                    assert!((&recon - &f).amax() <= 1e-12);

                    for part in &dec.bad {
                        let mean: f64 = part
                            .cube
                            .sites
                            .iter()
                            .map(|&id| part.values[id] * model.measure(id))
                            .sum();
                        assert!(mean.abs() <= 1e-12 * part.cube.measure.max(1.0));
                        assert!(part.cube.avg_abs <= (2f64.powi(m)) * lambda);
                        if part.cube.class == CubeClass::Interior {
                            assert!(part.cube.hi <= 2.0 * part.cube.lo);
                        }
                    }

                    let good_l1 = chart_l1(&grid, &dec.good);
                    assert!(good_l1 <= l1 * (1.0 + 1e-12));
                    assert!(dec.good.amax() <= 2f64.powi(m) * lambda);
                    assert!(dec.bad_measure() <= l1 / lambda * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn origin_cube_can_overshoot_the_interior_average_bound() {
        // A point mass at the innermost big-end site. Its cell is far
        // lighter than its neighbor's, so the singleton origin cube is
        // selected with an average well above 2^m lambda; the interior
        // bound genuinely does not extend to origin cubes at cell scale.
        let model = model();
        let grid = DyadicGrid::new(&model, Region::BigEnd).unwrap();
        let mut f = DVector::zeros(model.site_count());
        f[grid.ids[0]] = 27.0;
        let dec = cz_decompose(&grid, &f, 1.0).unwrap();
        assert_eq!(dec.bad.len(), 1);
        let cube = &dec.bad[0].cube;
        assert_eq!(cube.class, CubeClass::OriginCorner);
        assert_eq!(cube.sites, vec![grid.ids[0]]);
        assert!(cube.avg_abs > 2f64.powi(model.params().m as i32) * 1.0);
    }

    #[test]
    fn generations_partition_and_halve() {
        let model = model();
        let grid = DyadicGrid::new(&model, Region::SmallEnd).unwrap();
        for level in [-2, 0, 1, 3] {
            let mut counts = std::collections::HashMap::new();
            for &c in &grid.coords {
                *counts.entry(DyadicGrid::cube_of(c, level)).or_insert(0) += 1;
            }
            let total: usize = counts.values().sum();
            assert_eq!(total, grid.len());
            for &c in &grid.coords {
                let child = DyadicGrid::cube_of(c, level);
                assert_eq!(DyadicGrid::cube_of(c, level + 1), child >> 1);
            }
        }
    }

    #[test]
    fn summary_serializes_the_cube_records() {
        let model = model();
        let grid = DyadicGrid::new(&model, Region::BigEnd).unwrap();
        let f = random_chart_fn(&grid, model.site_count(), 7);
        let top_avg = chart_l1(&grid, &f) / grid.weights.iter().sum::<f64>();
        let dec = cz_decompose(&grid, &f, 2.0 * top_avg).unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&dec.summary_json()).unwrap();
        assert_eq!(
            parsed["cubes"].as_array().unwrap().len(),
            dec.bad.len()
        );
        assert!(parsed["cubes"][0]["class"].is_string());
    }

    #[test]
    fn rejects_bad_inputs() {
        let model = model();
        let grid = DyadicGrid::new(&model, Region::BigEnd).unwrap();
        let f = random_chart_fn(&grid, model.site_count(), 1);
        assert!(matches!(
            cz_decompose(&grid, &f, 0.0),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            cz_decompose(&grid, &f, 1e-9),
            Err(Error::InvalidParameter { .. })
        ));
        let center = (0..model.site_count())
            .find(|&i| model.region(i) == Region::Center)
            .unwrap();
        let mut off = f.clone();
        off[center] = 1.0;
        let loose = 10.0 * chart_l1(&grid, &f) / grid.weights.iter().sum::<f64>();
        assert!(matches!(
            cz_decompose(&grid, &off, loose),
            Err(Error::InvalidParameter { .. })
        ));
        assert!(matches!(
            DyadicGrid::new(&model, Region::Center),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
