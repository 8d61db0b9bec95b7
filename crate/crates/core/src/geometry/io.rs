//! Versioned plain-text serialization of a built model. Sites and edges are
//! written in id order, so equal models produce byte-identical files.

use super::{Edge, ManifoldModel, MeshMode, ModelParams, Region, Site};
use crate::error::{Error, Result};
use std::io::Write;

const HEADER: &str = "twoends-model v1";

pub fn write_model_text(model: &ManifoldModel, w: &mut impl Write) -> Result<()> {
    let p = model.params();
    writeln!(w, "{HEADER}")?;
    writeln!(
        w,
        "params m={} n={} h={} r_max={} center_width={} mode={}",
        p.m,
        p.n,
        p.h,
        p.r_max,
        p.center_width,
        match p.mode {
            MeshMode::RadialRay => "radial-ray",
            MeshMode::FullMesh => "full-mesh",
        }
    )?;
    writeln!(w, "sites {}", model.site_count())?;
    for s in model.sites() {
        writeln!(w, "{} {} {} {}", s.id, s.region.label(), s.r, s.measure)?;
    }
    writeln!(w, "edges {}", model.edges().len())?;
    for e in model.edges() {
        writeln!(w, "{} {} {} {}", e.i, e.j, e.conductance, e.length)?;
    }
    Ok(())
}

pub fn parse_model_text(text: &str) -> Result<ManifoldModel> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty file".into()))?;
    if header.trim() != HEADER {
        return Err(Error::Parse(format!(
            "unrecognized header `{header}`, expected `{HEADER}`"
        )));
    }
    let params_line = lines
        .next()
        .ok_or_else(|| Error::Parse("missing params line".into()))?;
    let params = parse_params(params_line)?;

    let sites_count = parse_count(lines.next(), "sites")?;
    let mut sites = Vec::with_capacity(sites_count);
    for k in 0..sites_count {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing site line {k}")))?;
        sites.push(parse_site(line)?);
    }
    let edges_count = parse_count(lines.next(), "edges")?;
    let mut edges = Vec::with_capacity(edges_count);
    for k in 0..edges_count {
        let line = lines
            .next()
            .ok_or_else(|| Error::Parse(format!("missing edge line {k}")))?;
        edges.push(parse_edge(line)?);
    }
    ManifoldModel::assemble(params, sites, edges)
}

fn parse_count(line: Option<&str>, keyword: &str) -> Result<usize> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing `{keyword}` line")))?;
    let mut parts = line.split_whitespace();
    match (parts.next(), parts.next()) {
        (Some(k), Some(v)) if k == keyword => v
            .parse()
            .map_err(|e| Error::Parse(format!("bad {keyword} count: {e}"))),
        _ => Err(Error::Parse(format!("expected `{keyword} <count>`: `{line}`"))),
    }
}

fn parse_params(line: &str) -> Result<ModelParams> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some("params") {
        return Err(Error::Parse(format!("expected params line, got `{line}`")));
    }
    let mut m = None;
    let mut n = None;
    let mut h = None;
    let mut r_max = None;
    let mut center_width = None;
    let mut mode = None;
    for kv in parts {
        let (key, value) = kv
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("bad key=value `{kv}`")))?;
        match key {
            "m" => m = Some(value.parse().map_err(|e| Error::Parse(format!("m: {e}")))?),
            "n" => n = Some(value.parse().map_err(|e| Error::Parse(format!("n: {e}")))?),
            "h" => h = Some(value.parse().map_err(|e| Error::Parse(format!("h: {e}")))?),
            "r_max" => {
                r_max = Some(value.parse().map_err(|e| Error::Parse(format!("r_max: {e}")))?)
            }
            "center_width" => {
                center_width = Some(
                    value
                        .parse()
                        .map_err(|e| Error::Parse(format!("center_width: {e}")))?,
                )
            }
            "mode" => {
                mode = Some(match value {
                    "radial-ray" => MeshMode::RadialRay,
                    "full-mesh" => MeshMode::FullMesh,
                    other => return Err(Error::Parse(format!("unknown mode `{other}`"))),
                })
            }
            other => return Err(Error::Parse(format!("unknown param `{other}`"))),
        }
    }
    Ok(ModelParams {
        m: m.ok_or_else(|| Error::Parse("missing m".into()))?,
        n: n.ok_or_else(|| Error::Parse("missing n".into()))?,
        h: h.ok_or_else(|| Error::Parse("missing h".into()))?,
        r_max: r_max.ok_or_else(|| Error::Parse("missing r_max".into()))?,
        center_width: center_width.ok_or_else(|| Error::Parse("missing center_width".into()))?,
        mode: mode.ok_or_else(|| Error::Parse("missing mode".into()))?,
    })
}

fn parse_site(line: &str) -> Result<Site> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(Error::Parse(format!("bad site line `{line}`")));
    }
    let region = match parts[1] {
        "big-end" => Region::BigEnd,
        "small-end" => Region::SmallEnd,
        "center" => Region::Center,
        other => return Err(Error::Parse(format!("unknown region `{other}`"))),
    };
    Ok(Site {
        id: parts[0]
            .parse()
            .map_err(|e| Error::Parse(format!("site id: {e}")))?,
        region,
        r: parts[2]
            .parse()
            .map_err(|e| Error::Parse(format!("site r: {e}")))?,
        measure: parts[3]
            .parse()
            .map_err(|e| Error::Parse(format!("site measure: {e}")))?,
    })
}

fn parse_edge(line: &str) -> Result<Edge> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    if parts.len() != 4 {
        return Err(Error::Parse(format!("bad edge line `{line}`")));
    }
    Ok(Edge {
        i: parts[0]
            .parse()
            .map_err(|e| Error::Parse(format!("edge i: {e}")))?,
        j: parts[1]
            .parse()
            .map_err(|e| Error::Parse(format!("edge j: {e}")))?,
        conductance: parts[2]
            .parse()
            .map_err(|e| Error::Parse(format!("edge conductance: {e}")))?,
        length: parts[3]
            .parse()
            .map_err(|e| Error::Parse(format!("edge length: {e}")))?,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{ManifoldModel, ModelParams};
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let model = ManifoldModel::build(ModelParams::radial(4, 3, 0.2, 15.0)).unwrap();
        let text = model.to_text();
        let back = parse_model_text(&text).unwrap();
        assert_eq!(back.site_count(), model.site_count());
        for (a, b) in model.sites().iter().zip(back.sites()) {
            assert_eq!(a.id, b.id);
            assert_eq!(a.region, b.region);
            assert_eq!(a.r, b.r);
            assert_eq!(a.measure, b.measure);
        }
        for (a, b) in model.edges().iter().zip(back.edges()) {
            assert_eq!((a.i, a.j), (b.i, b.j));
            assert_eq!(a.conductance, b.conductance);
            assert_eq!(a.length, b.length);
        }
        assert_eq!(back.to_text(), text);
    }

    #[test]
    fn rejects_unknown_version() {
        let err = parse_model_text("twoends-model v9\n").unwrap_err();
        assert!(matches!(err, Error::Parse(_)));
    }
}
