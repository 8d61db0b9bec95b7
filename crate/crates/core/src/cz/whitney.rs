//! Covering of an open site set by balls that scale with the distance to
//! the complement.

use crate::error::{Error, Result};
use crate::geometry::ManifoldModel;
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct WhitneyBall {
    pub center: usize,
    /// Half the distance from the center to the complement.
    pub radius: f64,
    /// Sites in the closed ball, in increasing id. Always inside the set.
    pub members: Vec<usize>,
}

/// Cover of an open site set by balls `B(x_i, d(x_i, complement)/2)`, with
/// membership counts for the induced partition of unity.
#[derive(Debug, Clone)]
pub struct WhitneyCover {
    pub balls: Vec<WhitneyBall>,
    /// Largest number of balls meeting any single site.
    pub overlap: usize,
    counts: Vec<usize>,
}

impl WhitneyCover {
    /// Partition weight of one ball at a site: membership indicator divided
    /// by the number of balls containing the site. The weights of all balls
    /// sum to one exactly on the covered set.
    pub fn weight(&self, ball: usize, site: usize) -> f64 {
        if self.balls[ball].members.binary_search(&site).is_ok() {
            1.0 / self.counts[site] as f64
        } else {
            0.0
        }
    }

    /// Number of balls containing the site.
    pub fn count(&self, site: usize) -> usize {
        self.counts[site]
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            overlap: usize,
            balls: &'a [WhitneyBall],
        }
        serde_json::to_string_pretty(&Summary {
            overlap: self.overlap,
            balls: &self.balls,
        })
        .expect("ball records serialize")
    }
}

/// Covers `omega` greedily: its sites are visited in order of decreasing
/// distance to the complement, and a site spawns a ball unless an earlier
/// ball already contains it. Every ball stays inside `omega` because its
/// radius is only half the distance to the complement, and balls selected
/// this way keep their fifth-size shrinkings pairwise disjoint.
pub fn whitney_cover(model: &ManifoldModel, omega: &[usize]) -> Result<WhitneyCover> {
    let n = model.site_count();
    let mut inside = vec![false; n];
    for &i in omega {
        if i >= n {
            return Err(Error::SiteOutOfRange { index: i, len: n });
        }
        inside[i] = true;
    }
    let complement: Vec<usize> = (0..n).filter(|&i| !inside[i]).collect();
    if complement.is_empty() {
        return Err(Error::WhitneyFullSpace);
    }

    let mut ordered: Vec<(usize, f64)> = (0..n)
        .filter(|&i| inside[i])
        .map(|i| {
            let row = model.distance_row(i);
            let d = complement
                .iter()
                .map(|&c| row[c])
                .fold(f64::INFINITY, f64::min);
            (i, d / 2.0)
        })
        .collect();
    ordered.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));

    let mut balls: Vec<WhitneyBall> = Vec::new();
    let mut counts = vec![0usize; n];
    for &(x, r) in &ordered {
        if balls
            .iter()
            .any(|b| model.distance(b.center, x) <= b.radius)
        {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&z| model.distance(x, z) <= r).collect();
        for &z in &members {
            counts[z] += 1;
        }
        balls.push(WhitneyBall {
            center: x,
            radius: r,
            members,
        });
    }
    let overlap = counts.iter().copied().max().unwrap_or(0);
    Ok(WhitneyCover {
        balls,
        overlap,
        counts,
    })
}
