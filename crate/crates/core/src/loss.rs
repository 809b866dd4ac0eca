//! Masked loss layer: cosine loss on raw normal predictions, softmax
//! cross-entropy over the 14 classes, and the weighted joint objective,
//! each with analytic gradients that are exactly zero off the mask.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::types::{Grid, LabelMap, NormalMap, Vec3, NUM_CLASSES, UNLABELED};

/// Weight applied to the cosine loss inside the joint objective.
pub const COSINE_LOSS_WEIGHT: f64 = 20.0;

/// Predictions with magnitude below this contribute a constant loss of 1
/// and a zero gradient instead of an exploding one.
const DEGENERATE_NORM: f64 = 1e-8;

/// Raw (pre-normalization) per-pixel 3-vector predictions.
#[derive(Clone, Debug, PartialEq)]
pub struct NormalPrediction {
    pub values: Grid<Vec3>,
}

/// Per-pixel unnormalized class scores.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticLogits {
    pub logits: Grid<[f64; NUM_CLASSES]>,
}

/// Loss value plus the gradient w.r.t. the prediction. The gradient is
/// exactly zero at every masked-out pixel.
#[derive(Clone, Debug, PartialEq)]
pub struct LossReport<G> {
    pub loss: f64,
    pub gradient: Grid<G>,
    pub n_contributing: u64,
    /// Masked-in pixels whose prediction was too small to normalize
    /// (cosine loss only; always zero for cross-entropy).
    pub n_degenerate: u64,
}

/// `1 − cos` similarity between the normalized prediction and the unit
/// ground-truth normal, averaged over masked-in pixels.
pub fn cosine_loss(
    pred: &NormalPrediction,
    gt: &NormalMap,
    mask: &Grid<bool>,
) -> Result<LossReport<Vec3>> {
    if !pred.values.same_size(&gt.normals) || !pred.values.same_size(mask) {
        return Err(Error::shape("cosine loss inputs differ in size"));
    }
    let n = mask.iter().filter(|&&m| m).count() as u64;
    if n == 0 {
        return Err(Error::EmptyLoss);
    }
    let (w, h) = (pred.values.width(), pred.values.height());
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    let mut n_degenerate = 0u64;
    let mut gradient = Grid::filled(w, h, Vec3::ZERO);
    for v in 0..h {
        for u in 0..w {
            if !mask[(u, v)] {
                continue;
            }
            let p = pred.values[(u, v)];
            let g = gt.normals[(u, v)];
            let norm = p.norm();
            if norm < DEGENERATE_NORM {
                total += 1.0;
                n_degenerate += 1;
                continue;
            }
            let unit = p * (1.0 / norm);
            let cos = unit.dot(g);
            total += 1.0 - cos;
            // d(1 − u·g)/dp = −(g − (u·g)u)/‖p‖, then the mean's 1/n.
            gradient[(u, v)] = (g - unit * cos) * (-inv_n / norm);
        }
    }
    Ok(LossReport {
        loss: total * inv_n,
        gradient,
        n_contributing: n,
        n_degenerate,
    })
}

/// Numerically stable softmax cross-entropy against integer labels,
/// averaged over masked-in pixels.
pub fn softmax_cross_entropy(
    logits: &SemanticLogits,
    gt: &LabelMap,
    mask: &Grid<bool>,
) -> Result<LossReport<[f64; NUM_CLASSES]>> {
    if !logits.logits.same_size(&gt.labels) || !logits.logits.same_size(mask) {
        return Err(Error::shape("cross-entropy inputs differ in size"));
    }
    let n = mask.iter().filter(|&&m| m).count() as u64;
    if n == 0 {
        return Err(Error::EmptyLoss);
    }
    let (w, h) = (logits.logits.width(), logits.logits.height());
    let inv_n = 1.0 / n as f64;
    let mut total = 0.0;
    let mut gradient = Grid::filled(w, h, [0.0; NUM_CLASSES]);
    for v in 0..h {
        for u in 0..w {
            if !mask[(u, v)] {
                continue;
            }
            let label = gt.labels[(u, v)];
            if label == UNLABELED || label as usize >= NUM_CLASSES {
                return Err(Error::Label(format!(
                    "masked-in pixel ({u},{v}) has no usable label"
                )));
            }
            let z = &logits.logits[(u, v)];
            for x in z {
                if !x.is_finite() {
                    return Err(Error::format("non-finite logit"));
                }
            }
            let (argmax, max) = z
                .iter()
                .copied()
                .enumerate()
                .fold((0usize, f64::NEG_INFINITY), |acc, (j, x)| {
                    if x > acc.1 {
                        (j, x)
                    } else {
                        acc
                    }
                });
            let mut sum_rest = 0.0;
            for (j, x) in z.iter().enumerate() {
                if j != argmax {
                    sum_rest += (x - max).exp();
                }
            }
            // log Σ exp(z − max) = log1p(Σ_{j≠argmax} ...) keeps precision
            // when the true class saturates.
            let log_denom = sum_rest.ln_1p();
            total += (max - z[label as usize]) + log_denom;
            let denom = 1.0 + sum_rest;
            let grad = &mut gradient[(u, v)];
            for (j, x) in z.iter().enumerate() {
                let softmax = (x - max).exp() / denom;
                grad[j] = (softmax - if j == label as usize { 1.0 } else { 0.0 }) * inv_n;
            }
        }
    }
    Ok(LossReport {
        loss: total * inv_n,
        gradient,
        n_contributing: n,
        n_degenerate: 0,
    })
}

/// Joint objective: cosine and cross-entropy losses summed with the cosine
/// term scaled by [`COSINE_LOSS_WEIGHT`]; gradients carry the same weights.
#[derive(Clone, Debug, PartialEq)]
pub struct JointLossReport {
    pub loss: f64,
    pub normal_gradient: Grid<Vec3>,
    pub logit_gradient: Grid<[f64; NUM_CLASSES]>,
    pub n_normal_pixels: u64,
    pub n_label_pixels: u64,
}

pub fn joint_loss(
    pred_n: &NormalPrediction,
    gt_n: &NormalMap,
    mask_n: &Grid<bool>,
    logits: &SemanticLogits,
    gt_l: &LabelMap,
    mask_l: &Grid<bool>,
) -> Result<JointLossReport> {
    let cos = cosine_loss(pred_n, gt_n, mask_n)?;
    let ce = softmax_cross_entropy(logits, gt_l, mask_l)?;
    let mut normal_gradient = cos.gradient;
    for g in normal_gradient.as_mut_slice() {
        *g = *g * COSINE_LOSS_WEIGHT;
    }
    Ok(JointLossReport {
        loss: COSINE_LOSS_WEIGHT * cos.loss + ce.loss,
        normal_gradient,
        logit_gradient: ce.gradient,
        n_normal_pixels: cos.n_contributing,
        n_label_pixels: ce.n_contributing,
    })
}

/// Central-difference gradient verification kernel.
///
/// Evaluates `loss` with each selected coordinate perturbed by ±epsilon and
/// returns the maximum relative disagreement with the analytic gradient,
/// `max |g_analytic − g_fd| / (|g_fd| + 1e-8)`.
pub fn finite_difference_check<F: FnMut(&[f64]) -> f64>(
    mut loss: F,
    params: &[f64],
    analytic: &[f64],
    indices: &[usize],
    epsilon: f64,
) -> f64 {
    assert_eq!(params.len(), analytic.len());
    let mut buf = params.to_vec();
    let mut max_rel: f64 = 0.0;
    for &i in indices {
        buf[i] = params[i] + epsilon;
        let plus = loss(&buf);
        buf[i] = params[i] - epsilon;
        let minus = loss(&buf);
        buf[i] = params[i];
        let fd = (plus - minus) / (2.0 * epsilon);
        let rel = (analytic[i] - fd).abs() / (fd.abs() + 1e-8);
        max_rel = max_rel.max(rel);
    }
    max_rel
}

fn flatten_vec3(g: &Grid<Vec3>) -> Vec<f64> {
    g.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

fn unflatten_vec3(w: usize, h: usize, flat: &[f64]) -> Grid<Vec3> {
    let data = flat
        .chunks_exact(3)
        .map(|c| Vec3::new(c[0], c[1], c[2]))
        .collect();
    Grid::from_vec(w, h, data).unwrap()
}

fn flatten_logits(g: &Grid<[f64; NUM_CLASSES]>) -> Vec<f64> {
    g.iter().flatten().copied().collect()
}

fn unflatten_logits(w: usize, h: usize, flat: &[f64]) -> Grid<[f64; NUM_CLASSES]> {
    let data = flat
        .chunks_exact(NUM_CLASSES)
        .map(|c| {
            let mut row = [0.0; NUM_CLASSES];
            row.copy_from_slice(c);
            row
        })
        .collect();
    Grid::from_vec(w, h, data).unwrap()
}

/// Picks up to 128 masked-in coordinates (all of them when fewer exist).
fn sample_coordinates(mask: &Grid<bool>, arity: usize, seed: u64) -> Vec<usize> {
    let mut all: Vec<usize> = Vec::new();
    for (i, &m) in mask.iter().enumerate() {
        if m {
            for c in 0..arity {
                all.push(i * arity + c);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    all.shuffle(&mut rng);
    all.truncate(128);
    all
}

/// Finite-difference check of [`cosine_loss`]'s gradient.
pub fn check_cosine_gradient(
    pred: &NormalPrediction,
    gt: &NormalMap,
    mask: &Grid<bool>,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    let report = cosine_loss(pred, gt, mask)?;
    let (w, h) = (pred.values.width(), pred.values.height());
    let params = flatten_vec3(&pred.values);
    let analytic = flatten_vec3(&report.gradient);
    let indices = sample_coordinates(mask, 3, seed);
    let loss = |flat: &[f64]| {
        let candidate = NormalPrediction {
            values: unflatten_vec3(w, h, flat),
        };
        cosine_loss(&candidate, gt, mask).unwrap().loss
    };
    Ok(finite_difference_check(loss, &params, &analytic, &indices, epsilon))
}

/// Finite-difference check of [`softmax_cross_entropy`]'s gradient.
pub fn check_softmax_gradient(
    logits: &SemanticLogits,
    gt: &LabelMap,
    mask: &Grid<bool>,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    let report = softmax_cross_entropy(logits, gt, mask)?;
    let (w, h) = (logits.logits.width(), logits.logits.height());
    let params = flatten_logits(&logits.logits);
    let analytic = flatten_logits(&report.gradient);
    let indices = sample_coordinates(mask, NUM_CLASSES, seed);
    let loss = |flat: &[f64]| {
        let candidate = SemanticLogits {
            logits: unflatten_logits(w, h, flat),
        };
        softmax_cross_entropy(&candidate, gt, mask).unwrap().loss
    };
    Ok(finite_difference_check(loss, &params, &analytic, &indices, epsilon))
}

/// Finite-difference check of [`joint_loss`]'s gradient over both heads.
#[allow(clippy::too_many_arguments)]
pub fn check_joint_gradient(
    pred_n: &NormalPrediction,
    gt_n: &NormalMap,
    mask_n: &Grid<bool>,
    logits: &SemanticLogits,
    gt_l: &LabelMap,
    mask_l: &Grid<bool>,
    epsilon: f64,
    seed: u64,
) -> Result<f64> {
    let report = joint_loss(pred_n, gt_n, mask_n, logits, gt_l, mask_l)?;
    let (wn, hn) = (pred_n.values.width(), pred_n.values.height());
    let (wl, hl) = (logits.logits.width(), logits.logits.height());
    let normal_len = wn * hn * 3;

    let mut params = flatten_vec3(&pred_n.values);
    params.extend(flatten_logits(&logits.logits));
    let mut analytic = flatten_vec3(&report.normal_gradient);
    analytic.extend(flatten_logits(&report.logit_gradient));

    let mut indices = sample_coordinates(mask_n, 3, seed);
    indices.extend(
        sample_coordinates(mask_l, NUM_CLASSES, seed ^ 0x9e3779b97f4a7c15)
            .into_iter()
            .map(|i| i + normal_len),
    );

    let loss = |flat: &[f64]| {
        let pn = NormalPrediction {
            values: unflatten_vec3(wn, hn, &flat[..normal_len]),
        };
        let lg = SemanticLogits {
            logits: unflatten_logits(wl, hl, &flat[normal_len..]),
        };
        joint_loss(&pn, gt_n, mask_n, &lg, gt_l, mask_l).unwrap().loss
    };
    Ok(finite_difference_check(loss, &params, &analytic, &indices, epsilon))
}
