//! Angle-error statistics and semantic pixel accuracy over valid masks.

use serde::{Deserialize, Serialize};

use crate::accum::CompensatedSum;
use crate::error::{Error, Result};
use crate::types::{angle_between, Grid, LabelMap, NormalMap, NUM_CLASSES, UNLABELED};

/// Per-pixel angle error in degrees, valid only where both inputs were.
#[derive(Clone, Debug, PartialEq)]
pub struct AngleErrorMap {
    pub deg: Grid<f64>,
    pub valid: Grid<bool>,
}

/// Normal-quality summary: mean and RMS angle error plus the fraction of
/// pixels under the three standard thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalMetrics {
    pub mean_angle_deg: f64,
    pub rmse_angle_deg: f64,
    pub pct_below_11_25: f64,
    pub pct_below_22_5: f64,
    pub pct_below_30: f64,
    pub n_pixels: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemanticMetrics {
    pub pixel_accuracy: f64,
    /// Accuracy per ground-truth class; `None` when the class has no pixels.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub n_pixels: u64,
}

/// Angle between prediction and ground truth at every jointly valid pixel.
pub fn angle_error_map(pred: &NormalMap, gt: &NormalMap) -> Result<AngleErrorMap> {
    if !pred.normals.same_size(&gt.normals) {
        return Err(Error::shape("prediction and ground truth differ in size"));
    }
    let (w, h) = (pred.width(), pred.height());
    let mut deg = Grid::filled(w, h, 0.0);
    let mut valid = Grid::filled(w, h, false);
    for v in 0..h {
        for u in 0..w {
            if pred.valid[(u, v)] && gt.valid[(u, v)] {
                deg[(u, v)] = angle_between(pred.normals[(u, v)], gt.normals[(u, v)])?;
                valid[(u, v)] = true;
            }
        }
    }
    Ok(AngleErrorMap { deg, valid })
}

/// Reduces an error map to [`NormalMetrics`]. Thresholds are inclusive.
pub fn normal_metrics(err: &AngleErrorMap) -> Result<NormalMetrics> {
    let mut sum = CompensatedSum::new();
    let mut sum_sq = CompensatedSum::new();
    let mut n = 0u64;
    let mut below = [0u64; 3];
    const THRESHOLDS: [f64; 3] = [11.25, 22.5, 30.0];
    for (e, &ok) in err.deg.iter().zip(err.valid.iter()) {
        if !ok {
            continue;
        }
        n += 1;
        sum.add(*e);
        sum_sq.add(e * e);
        for (i, t) in THRESHOLDS.iter().enumerate() {
            if *e <= *t {
                below[i] += 1;
            }
        }
    }
    if n == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let nf = n as f64;
    Ok(NormalMetrics {
        mean_angle_deg: sum.total() / nf,
        rmse_angle_deg: (sum_sq.total() / nf).sqrt(),
        pct_below_11_25: 100.0 * below[0] as f64 / nf,
        pct_below_22_5: 100.0 * below[1] as f64 / nf,
        pct_below_30: 100.0 * below[2] as f64 / nf,
        n_pixels: n,
    })
}

/// Pixel accuracy over labeled ground-truth pixels, plus per-class
/// accuracies over each ground-truth class's own pixels.
pub fn semantic_accuracy(pred: &LabelMap, gt: &LabelMap) -> Result<SemanticMetrics> {
    if !pred.labels.same_size(&gt.labels) {
        return Err(Error::shape("prediction and ground truth differ in size"));
    }
    let mut total = 0u64;
    let mut matches = 0u64;
    let mut class_total = [0u64; NUM_CLASSES];
    let mut class_match = [0u64; NUM_CLASSES];
    for (p, g) in pred.labels.iter().zip(gt.labels.iter()) {
        if *g == UNLABELED {
            continue;
        }
        total += 1;
        class_total[*g as usize] += 1;
        if p == g {
            matches += 1;
            class_match[*g as usize] += 1;
        }
    }
    if total == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let per_class = (0..NUM_CLASSES)
        .map(|c| {
            if class_total[c] == 0 {
                None
            } else {
                Some(100.0 * class_match[c] as f64 / class_total[c] as f64)
            }
        })
        .collect();
    Ok(SemanticMetrics {
        pixel_accuracy: 100.0 * matches as f64 / total as f64,
        per_class_accuracy: per_class,
        n_pixels: total,
    })
}
