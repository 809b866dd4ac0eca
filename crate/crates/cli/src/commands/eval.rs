//! `rgbdn eval`: metrics JSON on stdout, optional error visualization.

use std::path::PathBuf;

use clap::Args;
use serde_json::json;

use rgbdn_core::io;
use rgbdn_core::metrics::{angle_error_map, normal_metrics, semantic_accuracy};
use rgbdn_core::{Error, Result};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predicted 48-bit normals PNG
    #[arg(long, requires = "gt")]
    pub pred: Option<PathBuf>,

    /// Ground-truth 48-bit normals PNG
    #[arg(long, requires = "pred")]
    pub gt: Option<PathBuf>,

    /// Predicted 8-bit label PNG
    #[arg(long, requires = "gt_labels")]
    pub pred_labels: Option<PathBuf>,

    /// Ground-truth 8-bit label PNG
    #[arg(long, requires = "pred_labels")]
    pub gt_labels: Option<PathBuf>,

    /// Optional angle-error visualization PNG
    #[arg(long)]
    pub error_viz: Option<PathBuf>,
}

pub fn run(args: &EvalArgs) -> Result<()> {
    let normal = match (&args.pred, &args.gt) {
        (Some(pred), Some(gt)) => {
            let pred = io::read_normals_png48(pred)?;
            let gt = io::read_normals_png48(gt)?;
            let err = angle_error_map(&pred, &gt)?;
            if let Some(viz) = &args.error_viz {
                io::write_error_viz(&err, viz)?;
            }
            Some(normal_metrics(&err)?)
        }
        _ => None,
    };
    let semantic = match (&args.pred_labels, &args.gt_labels) {
        (Some(pred), Some(gt)) => {
            let pred = io::read_label_png8(pred)?;
            let gt = io::read_label_png8(gt)?;
            Some(semantic_accuracy(&pred, &gt)?)
        }
        _ => None,
    };
    let report = match (normal, semantic) {
        (Some(n), None) => serde_json::to_value(n),
        (None, Some(s)) => serde_json::to_value(s),
        (Some(n), Some(s)) => Ok(json!({ "normal_metrics": n, "semantic_metrics": s })),
        (None, None) => {
            return Err(Error::config(
                "nothing to evaluate: pass --pred/--gt and/or --pred-labels/--gt-labels",
            ))
        }
    }
    .map_err(|e| Error::format(e.to_string()))?;
    println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::format(e.to_string()))?);
    Ok(())
}
