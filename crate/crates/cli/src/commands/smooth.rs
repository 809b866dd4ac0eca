//! `rgbdn smooth`: semantics-driven planar smoothing of a normal map.

use std::path::PathBuf;

use clap::Args;

use rgbdn_core::io;
use rgbdn_core::semantic::{apply_region_normals, grow_regions};
use rgbdn_core::Result;

use crate::config::{resolve_grow, GrowOverrides, RunConfig};

#[derive(Args, Debug)]
pub struct SmoothArgs {
    /// Input 48-bit normals PNG (with its validity sidecar)
    pub normals: PathBuf,

    /// Input 8-bit semantic label PNG
    pub labels: PathBuf,

    /// Output 48-bit normals PNG
    #[arg(long)]
    pub out: PathBuf,

    /// Admission gate in degrees against the region's running average
    /// [default: 30]
    #[arg(long)]
    pub angle_threshold: Option<f64>,

    /// Regions smaller than this keep their original normals [default: 100]
    #[arg(long)]
    pub min_region_size: Option<usize>,

    /// Pixel connectivity, 4 or 8 [default: 4]
    #[arg(long)]
    pub connectivity: Option<u8>,

    /// Comma-separated class names or IDs assumed planar; an empty string
    /// disables smoothing [default: floor,wall,ceiling]
    #[arg(long)]
    pub planar_classes: Option<String>,

    /// Optional visualization PNG of the smoothed normals
    #[arg(long)]
    pub viz: Option<PathBuf>,

    /// JSON config file; explicit flags override it
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: &SmoothArgs) -> Result<()> {
    let cfg = RunConfig::load(args.config.as_deref())?;
    let gp = resolve_grow(
        &cfg,
        &GrowOverrides {
            angle_threshold: args.angle_threshold,
            min_region_size: args.min_region_size,
            connectivity: args.connectivity,
            planar_classes: args.planar_classes.clone(),
        },
    )?;
    let nm = io::read_normals_png48(&args.normals)?;
    let lm = io::read_label_png8(&args.labels)?;
    let regions = grow_regions(&nm, &lm, &gp)?;
    let smoothed = apply_region_normals(&nm, &regions, &gp);
    io::write_normals_png48(&smoothed, &args.out)?;
    if let Some(viz) = &args.viz {
        io::write_normal_viz(&smoothed, viz)?;
    }
    Ok(())
}
