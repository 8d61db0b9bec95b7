//! Genuine product-lattice realization, for small-radius sanity checks only.
//!
//! The big end is the cubic lattice of spacing `h` in a ball of radius
//! `r_max`; the small end is an `n`-dimensional lattice ball crossed with a
//! discretized unit circle, so it needs `m - n = 1`. A single hub cell stands
//! in for the center and attaches to both end origins. Site counts explode
//! with `r_max`, which is why the radial mode exists.

use super::{Edge, ModelParams, Region, Site};
use crate::error::{Error, Result};
use std::collections::HashMap;

fn lattice_ball(dim: u32, steps: i64) -> Vec<Vec<i64>> {
    let mut points = Vec::new();
    let mut current = vec![-steps; dim as usize];
    loop {
        let norm2: i64 = current.iter().map(|z| z * z).sum();
        if norm2 <= steps * steps {
            points.push(current.clone());
        }
        let mut k = 0;
        loop {
            current[k] += 1;
            if current[k] <= steps {
                break;
            }
            current[k] = -steps;
            k += 1;
            if k == dim as usize {
                return points;
            }
        }
    }
}

pub fn build(params: &ModelParams) -> Result<(Vec<Site>, Vec<Edge>)> {
    if params.m != params.n + 1 {
        return Err(Error::Unsupported(
            "full-mesh mode discretizes the cross sphere as a circle and needs m = n + 1".into(),
        ));
    }
    let h = params.h;
    let steps = (params.r_max / h).floor() as i64;
    let circle = ((std::f64::consts::TAU / h).round() as usize).max(4);
    let arc = std::f64::consts::TAU / circle as f64;

    let mut sites = Vec::new();
    let mut edges = Vec::new();

    // Hub cell standing in for the center.
    let hub = 0usize;
    sites.push(Site {
        id: hub,
        region: Region::Center,
        r: 0.0,
        measure: params.center_width.powi(params.m as i32),
    });
    let hub_len = params.center_width / 2.0;

    // Big end: m-dimensional lattice ball.
    let big_points = lattice_ball(params.m, steps);
    let mut big_index = HashMap::new();
    for p in &big_points {
        let id = sites.len();
        big_index.insert(p.clone(), id);
        let r = h * (p.iter().map(|z| (z * z) as f64).sum::<f64>()).sqrt();
        sites.push(Site {
            id,
            region: Region::BigEnd,
            r,
            measure: h.powi(params.m as i32),
        });
    }
    let big_cond = h.powi(params.m as i32 - 2);
    for p in &big_points {
        let i = big_index[p];
        for axis in 0..params.m as usize {
            let mut q = p.clone();
            q[axis] += 1;
            if let Some(&j) = big_index.get(&q) {
                edges.push(Edge {
                    i,
                    j,
                    conductance: big_cond,
                    length: h,
                });
            }
        }
    }
    edges.push(Edge {
        i: hub,
        j: big_index[&vec![0; params.m as usize]],
        conductance: h.powi(params.m as i32 - 1) / hub_len,
        length: hub_len,
    });

    // Small end: n-dimensional lattice ball crossed with a circle.
    let small_points = lattice_ball(params.n, steps);
    let mut small_index = HashMap::new();
    for p in &small_points {
        for q in 0..circle {
            let id = sites.len();
            small_index.insert((p.clone(), q), id);
            let r = h * (p.iter().map(|z| (z * z) as f64).sum::<f64>()).sqrt();
            sites.push(Site {
                id,
                region: Region::SmallEnd,
                r,
                measure: h.powi(params.n as i32) * arc,
            });
        }
    }
    let small_cond = h.powi(params.n as i32 - 2) * arc;
    let circle_cond = h.powi(params.n as i32) / arc;
    for p in &small_points {
        for q in 0..circle {
            let i = small_index[&(p.clone(), q)];
            for axis in 0..params.n as usize {
                let mut s = p.clone();
                s[axis] += 1;
                if let Some(&j) = small_index.get(&(s, q)) {
                    edges.push(Edge {
                        i,
                        j,
                        conductance: small_cond,
                        length: h,
                    });
                }
            }
            let j = small_index[&(p.clone(), (q + 1) % circle)];
            if j > i {
                edges.push(Edge {
                    i,
                    j,
                    conductance: circle_cond,
                    length: arc,
                });
            }
        }
    }
    for q in 0..circle {
        edges.push(Edge {
            i: hub,
            j: small_index[&(vec![0; params.n as usize], q)],
            conductance: h.powi(params.n as i32 - 1) * arc / hub_len,
            length: hub_len,
        });
    }

    Ok((sites, edges))
}
