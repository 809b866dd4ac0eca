//! `rgbdn viz`: render a normal map or an angle-error image as RGB.

use std::path::PathBuf;

use clap::Args;

use rgbdn_core::io;
use rgbdn_core::metrics::angle_error_map;
use rgbdn_core::{Error, Result};

#[derive(Args, Debug)]
pub struct VizArgs {
    /// 48-bit normals PNG to render with the (x, y, z) -> (r, g, b) mapping
    #[arg(long, conflicts_with_all = ["pred", "gt"])]
    pub normals: Option<PathBuf>,

    /// Predicted normals PNG, rendered as an error image against --gt
    #[arg(long, requires = "gt")]
    pub pred: Option<PathBuf>,

    /// Ground-truth normals PNG
    #[arg(long, requires = "pred")]
    pub gt: Option<PathBuf>,

    /// Output 8-bit RGB PNG
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &VizArgs) -> Result<()> {
    match (&args.normals, &args.pred, &args.gt) {
        (Some(normals), None, None) => {
            let nm = io::read_normals_png48(normals)?;
            io::write_normal_viz(&nm, &args.out)
        }
        (None, Some(pred), Some(gt)) => {
            let pred = io::read_normals_png48(pred)?;
            let gt = io::read_normals_png48(gt)?;
            let err = angle_error_map(&pred, &gt)?;
            io::write_error_viz(&err, &args.out)
        }
        _ => Err(Error::config(
            "pass either --normals, or --pred together with --gt",
        )),
    }
}
