//! Optional JSON run configuration. Values resolve in three layers:
//! built-in defaults, then the config file, then explicit CLI flags.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use rgbdn_core::mix::MixSpec;
use rgbdn_core::normals::NormalParams;
use rgbdn_core::preprocess::PreprocessParams;
use rgbdn_core::semantic::{Connectivity, GrowParams};
use rgbdn_core::types::{class_id, PlanarClassSet};
use rgbdn_core::{Error, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preprocess: Option<PreprocessConfig>,
    pub normals: Option<NormalsConfig>,
    pub grow: Option<GrowConfig>,
    pub depth_scale_mm_per_unit: Option<f64>,
    pub mix: Option<MixSpec>,
    pub dataset_sizes: Option<BTreeMap<String, usize>>,
    pub n_batches: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessConfig {
    pub fill_max_radius: Option<usize>,
    pub median_window: Option<usize>,
    pub depth_change_factor: Option<f64>,
    pub min_depth: Option<f64>,
    pub max_depth: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalsConfig {
    pub sigma: Option<f64>,
    pub z_ref: Option<f64>,
    pub max_half_window: Option<usize>,
    pub min_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowConfig {
    pub angle_threshold_deg: Option<f64>,
    pub min_region_size: Option<usize>,
    pub connectivity: Option<u8>,
    pub planar_classes: Option<Vec<String>>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                serde_json::from_str(&text)
                    .map_err(|e| Error::config(format!("{}: {e}", p.display())))
            }
        }
    }
}

/// Flag-level overrides shared by `compute`.
#[derive(Debug, Default)]
pub struct PreprocessOverrides {
    pub fill_max_radius: Option<usize>,
    pub median_window: Option<usize>,
    pub depth_change_factor: Option<f64>,
    pub min_depth: Option<f64>,
    pub max_depth: Option<f64>,
}

pub fn resolve_preprocess(cfg: &RunConfig, flags: &PreprocessOverrides) -> Result<PreprocessParams> {
    let mut p = PreprocessParams::default();
    if let Some(c) = &cfg.preprocess {
        apply(&mut p.fill_max_radius, c.fill_max_radius);
        apply(&mut p.median_window, c.median_window);
        apply(&mut p.depth_change_factor, c.depth_change_factor);
        apply(&mut p.min_depth, c.min_depth);
        apply(&mut p.max_depth, c.max_depth);
    }
    apply(&mut p.fill_max_radius, flags.fill_max_radius);
    apply(&mut p.median_window, flags.median_window);
    apply(&mut p.depth_change_factor, flags.depth_change_factor);
    apply(&mut p.min_depth, flags.min_depth);
    apply(&mut p.max_depth, flags.max_depth);
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Default)]
pub struct NormalsOverrides {
    pub sigma: Option<f64>,
    pub z_ref: Option<f64>,
    pub max_half_window: Option<usize>,
    pub min_points: Option<usize>,
}

pub fn resolve_normals(cfg: &RunConfig, flags: &NormalsOverrides) -> Result<NormalParams> {
    let mut p = NormalParams::default();
    if let Some(c) = &cfg.normals {
        apply(&mut p.sigma, c.sigma);
        apply(&mut p.z_ref, c.z_ref);
        apply(&mut p.max_half_window, c.max_half_window);
        apply(&mut p.min_points, c.min_points);
    }
    apply(&mut p.sigma, flags.sigma);
    apply(&mut p.z_ref, flags.z_ref);
    apply(&mut p.max_half_window, flags.max_half_window);
    apply(&mut p.min_points, flags.min_points);
    p.validate()?;
    Ok(p)
}

#[derive(Debug, Default)]
pub struct GrowOverrides {
    pub angle_threshold: Option<f64>,
    pub min_region_size: Option<usize>,
    pub connectivity: Option<u8>,
    pub planar_classes: Option<String>,
}

pub fn resolve_grow(cfg: &RunConfig, flags: &GrowOverrides) -> Result<GrowParams> {
    let mut p = GrowParams::default();
    if let Some(c) = &cfg.grow {
        apply(&mut p.angle_threshold_deg, c.angle_threshold_deg);
        apply(&mut p.min_region_size, c.min_region_size);
        if let Some(conn) = c.connectivity {
            p.connectivity = parse_connectivity(conn)?;
        }
        if let Some(classes) = &c.planar_classes {
            p.planar_classes = parse_planar_classes_list(classes)?;
        }
    }
    apply(&mut p.angle_threshold_deg, flags.angle_threshold);
    apply(&mut p.min_region_size, flags.min_region_size);
    if let Some(conn) = flags.connectivity {
        p.connectivity = parse_connectivity(conn)?;
    }
    if let Some(classes) = &flags.planar_classes {
        p.planar_classes = parse_planar_classes(classes)?;
    }
    p.validate()?;
    Ok(p)
}

fn apply<T>(target: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *target = v;
    }
}

pub fn parse_connectivity(v: u8) -> Result<Connectivity> {
    match v {
        4 => Ok(Connectivity::Four),
        8 => Ok(Connectivity::Eight),
        other => Err(Error::config(format!("connectivity must be 4 or 8, got {other}"))),
    }
}

/// Comma-separated class names or numeric IDs; an empty string is the empty
/// set (semantic smoothing becomes the identity).
pub fn parse_planar_classes(spec: &str) -> Result<PlanarClassSet> {
    let parts: Vec<String> = spec
        .split(',')
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect();
    parse_planar_classes_list(&parts)
}

fn parse_planar_classes_list(parts: &[String]) -> Result<PlanarClassSet> {
    let mut ids = Vec::new();
    for part in parts {
        if let Ok(id) = part.parse::<u8>() {
            ids.push(id);
        } else if let Some(id) = class_id(part) {
            ids.push(id);
        } else {
            return Err(Error::config(format!("unknown class {part:?}")));
        }
    }
    PlanarClassSet::from_ids(ids).map_err(|e| Error::config(e.to_string()))
}
