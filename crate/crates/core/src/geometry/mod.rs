//! Discrete models of the two-ends space.
//!
//! The space has a big end whose volume grows with exponent `m`, a small end
//! with large-scale exponent `n < m`, and a compact center of unit size
//! joining them. Points carry the weighted measure of the shell they
//! represent and the norm `|x|` equals `1 +` distance to the center, so the
//! center sits at `|x| = 1` and every site has `|x| >= 1`.

mod distance;
mod io;
mod mesh;
mod radial;
mod volume;

pub use io::parse_model_text;
pub use volume::{DoublingWitness, VolumeRegressionPoint, VolumeReport};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Hard cap on model size; the dense distance cache is quadratic.
pub const SITE_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    BigEnd,
    SmallEnd,
    Center,
}

impl Region {
    pub fn label(self) -> &'static str {
        match self {
            Region::BigEnd => "big-end",
            Region::SmallEnd => "small-end",
            Region::Center => "center",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeshMode {
    /// Two weighted half-lines joined through the center. Default.
    RadialRay,
    /// Genuine product lattice; feasible only at very small radii.
    FullMesh,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelParams {
    /// Big-end volume exponent, `m > n`.
    pub m: u32,
    /// Small-end large-scale volume exponent, `n >= 3`.
    pub n: u32,
    /// Target mesh width.
    pub h: f64,
    /// Truncation radius of each end.
    pub r_max: f64,
    /// Width of the center segment.
    pub center_width: f64,
    pub mode: MeshMode,
}

impl ModelParams {
    pub fn radial(m: u32, n: u32, h: f64, r_max: f64) -> Self {
        ModelParams {
            m,
            n,
            h,
            r_max,
            center_width: 1.0,
            mode: MeshMode::RadialRay,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::invalid("n", "small-end exponent must be at least 3"));
        }
        if self.m <= self.n {
            return Err(Error::invalid("m", "big-end exponent must exceed n"));
        }
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(Error::invalid("h", "mesh width must be positive"));
        }
        if !(self.center_width > 0.0) || !self.center_width.is_finite() {
            return Err(Error::invalid("center_width", "must be positive"));
        }
        if !self.r_max.is_finite() || self.r_max < 10.0 * self.center_width {
            return Err(Error::invalid(
                "r_max",
                "truncation radius must be at least 10 center widths",
            ));
        }
        if self.mode == MeshMode::RadialRay && self.h >= self.center_width {
            return Err(Error::invalid("h", "mesh width must resolve the center"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Site {
    pub id: usize,
    pub region: Region,
    /// Radial coordinate within its region chart.
    pub r: f64,
    /// Measure of the cell the site represents.
    pub measure: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub conductance: f64,
    pub length: f64,
}

/// Immutable discrete model. Distances and norms are computed at
/// construction, so a built model is safe to share across threads.
#[derive(Debug, Clone)]
pub struct ManifoldModel {
    params: ModelParams,
    sites: Vec<Site>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64, f64)>>,
    dist: Vec<f64>,
    norm_abs: Vec<f64>,
}

impl ManifoldModel {
    pub fn build(params: ModelParams) -> Result<Self> {
        params.validate()?;
        let (sites, edges) = match params.mode {
            MeshMode::RadialRay => radial::build(&params),
            MeshMode::FullMesh => mesh::build(&params)?,
        };
        Self::assemble(params, sites, edges)
    }

    pub(crate) fn assemble(params: ModelParams, sites: Vec<Site>, edges: Vec<Edge>) -> Result<Self> {
        let len = sites.len();
        if len == 0 {
            return Err(Error::EmptyInput("model has no sites".into()));
        }
        if len > SITE_CAP {
            return Err(Error::SizeCapExceeded {
                sites: len,
                cap: SITE_CAP,
            });
        }
        let mut adjacency = vec![Vec::new(); len];
        for e in &edges {
            if e.i >= len || e.j >= len {
                return Err(Error::SiteOutOfRange {
                    index: e.i.max(e.j),
                    len,
                });
            }
            if !(e.conductance > 0.0) || !(e.length > 0.0) {
                return Err(Error::invalid("edge", "conductance and length must be positive"));
            }
            adjacency[e.i].push((e.j, e.length, e.conductance));
            adjacency[e.j].push((e.i, e.length, e.conductance));
        }
        let dist = distance::all_pairs(&adjacency)?;
        let centers: Vec<usize> = sites
            .iter()
            .filter(|s| s.region == Region::Center)
            .map(|s| s.id)
            .collect();
        if centers.is_empty() {
            return Err(Error::EmptyInput("model has no center sites".into()));
        }
        let norm_abs = (0..len)
            .map(|i| {
                let d = centers
                    .iter()
                    .map(|&c| dist[i * len + c])
                    .fold(f64::INFINITY, f64::min);
                1.0 + d
            })
            .collect();
        Ok(ManifoldModel {
            params,
            sites,
            edges,
            adjacency,
            dist,
            norm_abs,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn site_count(&self) -> usize {
        self.sites.len()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn adjacency(&self, i: usize) -> &[(usize, f64, f64)] {
        &self.adjacency[i]
    }

    pub fn region(&self, i: usize) -> Region {
        self.sites[i].region
    }

    pub fn measure(&self, i: usize) -> f64 {
        self.sites[i].measure
    }

    pub fn measures(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.measure).collect()
    }

    pub fn total_measure(&self) -> f64 {
        self.sites.iter().map(|s| s.measure).sum()
    }

    /// Exact graph distance between two sites.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.sites.len() + j]
    }

    pub fn distance_row(&self, i: usize) -> &[f64] {
        let len = self.sites.len();
        &self.dist[i * len..(i + 1) * len]
    }

    /// `|x| = 1 +` distance to the nearest center site, so `|x| >= 1`.
    pub fn norm_abs(&self, i: usize) -> f64 {
        self.norm_abs[i]
    }

    /// Measure of the graph ball: sum of site measures within distance `r`.
    pub fn ball_volume(&self, x: usize, r: f64) -> f64 {
        let row = self.distance_row(x);
        row.iter()
            .zip(&self.sites)
            .filter(|(d, _)| **d <= r)
            .map(|(_, s)| s.measure)
            .sum()
    }

    /// Ball measure restricted to one region.
    pub fn ball_volume_in(&self, x: usize, r: f64, region: Region) -> f64 {
        let row = self.distance_row(x);
        row.iter()
            .zip(&self.sites)
            .filter(|(d, s)| **d <= r && s.region == region)
            .map(|(_, s)| s.measure)
            .sum()
    }

    pub fn sites_in(&self, region: Region) -> impl Iterator<Item = &Site> {
        self.sites.iter().filter(move |s| s.region == region)
    }

    /// Site of the given region closest to the requested norm.
    pub fn site_at_norm(&self, region: Region, norm: f64) -> Option<usize> {
        self.sites_in(region)
            .min_by(|a, b| {
                let da = (self.norm_abs[a.id] - norm).abs();
                let db = (self.norm_abs[b.id] - norm).abs();
                da.partial_cmp(&db).unwrap()
            })
            .map(|s| s.id)
    }

    pub fn check_site(&self, i: usize) -> Result<()> {
        if i >= self.sites.len() {
            return Err(Error::SiteOutOfRange {
                index: i,
                len: self.sites.len(),
            });
        }
        Ok(())
    }

    pub fn volume_growth_report(&self) -> Result<VolumeReport> {
        volume::growth_report(self)
    }

    pub fn doubling_witness(&self) -> DoublingWitness {
        volume::doubling_witness(self)
    }

    pub fn write_text(&self, w: &mut impl std::io::Write) -> Result<()> {
        io::write_model_text(self, w)
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write_text(&mut buf).expect("write to Vec cannot fail");
        String::from_utf8(buf).expect("model text is ascii")
    }
}
