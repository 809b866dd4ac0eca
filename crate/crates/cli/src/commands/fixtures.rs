//! `rgbdn fixtures`: emit the three canonical test scenes so pipeline runs
//! can be reproduced end to end from files.

use std::path::{Path, PathBuf};

use clap::Args;

use rgbdn_core::fixtures::{
    add_noise, corner_noise, corner_scene, flat_plane_scene, render_scene, slanted_plane_fixture,
    RenderedScene,
};
use rgbdn_core::io;
use rgbdn_core::{CameraIntrinsics, Result};

#[derive(Args, Debug)]
pub struct FixturesArgs {
    /// Directory receiving flat/, slanted/, and corner/ scene folders
    #[arg(long)]
    pub out_dir: PathBuf,

    /// Noise seed for the corner scene's noisy depth [default: 7]
    #[arg(long, default_value_t = 7)]
    pub seed: u64,

    /// Axial noise at 1 m for the noisy corner depth, meters
    /// [default: 0.006]
    #[arg(long)]
    pub noise_sigma: Option<f64>,

    /// Probability that a noisy pixel is knocked out [default: 0.01]
    #[arg(long, default_value_t = 0.01)]
    pub speckle: f64,
}

fn write_scene(dir: &Path, scene: &RenderedScene, k: &CameraIntrinsics) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    io::write_depth_png16(&scene.depth, &dir.join("depth.png"), 1.0)?;
    io::write_label_png8(&scene.labels, &dir.join("labels.png"))?;
    io::write_normals_png48(&scene.normals, &dir.join("normals_gt.png"))?;
    io::write_normal_viz(&scene.normals, &dir.join("normals_gt.viz.png"))?;
    io::write_intrinsics(k, &dir.join("intrinsics.json"))?;
    Ok(())
}

pub fn run(args: &FixturesArgs) -> Result<()> {
    let k = CameraIntrinsics::new(500.0, 500.0, 160.0, 120.0, 320, 240)?;

    let flat = render_scene(&flat_plane_scene(&k))?;
    write_scene(&args.out_dir.join("flat"), &flat, &k)?;

    let slanted = slanted_plane_fixture(&k, 2.0, 0.002);
    write_scene(&args.out_dir.join("slanted"), &slanted, &k)?;

    let corner = render_scene(&corner_scene(&k))?;
    let corner_dir = args.out_dir.join("corner");
    write_scene(&corner_dir, &corner, &k)?;
    let mut noise = corner_noise(args.seed);
    if let Some(sigma) = args.noise_sigma {
        noise.sigma_at_1m = sigma;
    }
    let noisy = add_noise(&corner.depth, &noise, args.speckle);
    io::write_depth_png16(&noisy, &corner_dir.join("depth_noisy.png"), 1.0)?;
    Ok(())
}
