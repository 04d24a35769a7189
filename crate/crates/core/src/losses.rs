//! Training objective pieces as pure, testable numerical functions:
//! penalty-reduced focal classification loss, L1 box loss, generalized-IoU
//! box loss, and their weighted total. These verify head outputs; there is
//! no autograd here.

use crate::error::{Error, Result};
use crate::geometry::{giou, BBox};

/// Probability clamp keeping `log` finite.
pub const PROB_EPSILON: f64 = 1e-7;
/// Focal exponent on the prediction term.
pub const DEFAULT_ALPHA: f64 = 2.0;
/// Focal exponent on the Gaussian target penalty.
pub const DEFAULT_BETA: f64 = 4.0;
/// Weight of the GIoU term in the total loss.
pub const LAMBDA_IOU: f64 = 2.0;
/// Weight of the L1 term in the total loss.
pub const LAMBDA_L1: f64 = 5.0;

/// Predicted probabilities and Gaussian-smoothed targets on one grid.
///
/// Predictions are clamped into `(0, 1)` by [`PROB_EPSILON`] at
/// construction so the log terms stay finite.
#[derive(Debug, Clone)]
pub struct ScoreMap {
    rows: usize,
    cols: usize,
    pred: Vec<f64>,
    target: Vec<f64>,
}

impl ScoreMap {
    pub fn new(rows: usize, cols: usize, pred: Vec<f64>, target: Vec<f64>) -> Result<Self> {
        let cells = rows * cols;
        if cells == 0 {
            return Err(Error::config("score map has no cells"));
        }
        if pred.len() != cells || target.len() != cells {
            return Err(Error::config(format!(
                "score map dimensions {rows}x{cols} do not match {} predictions / {} targets",
                pred.len(),
                target.len()
            )));
        }
        for (i, &p) in pred.iter().enumerate() {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!(
                    "prediction {p} at cell {i} outside [0, 1]"
                )));
            }
        }
        for (i, &y) in target.iter().enumerate() {
            if !y.is_finite() || !(0.0..=1.0).contains(&y) {
                return Err(Error::config(format!(
                    "target {y} at cell {i} outside [0, 1]"
                )));
            }
        }
        let pred = pred
            .into_iter()
            .map(|p| p.clamp(PROB_EPSILON, 1.0 - PROB_EPSILON))
            .collect();
        Ok(Self {
            rows,
            cols,
            pred,
            target,
        })
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn predictions(&self) -> &[f64] {
        &self.pred
    }

    pub fn targets(&self) -> &[f64] {
        &self.target
    }
}

/// Penalty-reduced focal loss, averaged over cells:
/// `-(1-p)^alpha * ln p` where the target is 1, and
/// `-(1-y)^beta * p^alpha * ln(1-p)` elsewhere.
pub fn focal_loss(map: &ScoreMap, alpha: f64, beta: f64) -> f64 {
    let total: f64 = map
        .pred
        .iter()
        .zip(&map.target)
        .map(|(&p, &y)| {
            if y == 1.0 {
                -(1.0 - p).powf(alpha) * p.ln()
            } else {
                -(1.0 - y).powf(beta) * p.powf(alpha) * (1.0 - p).ln()
            }
        })
        .sum();
    total / map.pred.len() as f64
}

/// Mean absolute difference of the four corner components.
pub fn l1_loss(pred: &BBox, gt: &BBox) -> f64 {
    ((pred.x - gt.x).abs() + (pred.y - gt.y).abs() + (pred.w - gt.w).abs() + (pred.h - gt.h).abs())
        / 4.0
}

/// L1 on coordinates normalized to `[0, 1]` by the image dimensions, the
/// form used when heads train on normalized boxes.
pub fn l1_loss_normalized(pred: &BBox, gt: &BBox, width: f64, height: f64) -> Result<f64> {
    if width <= 0.0 || height <= 0.0 {
        return Err(Error::config(format!(
            "image dimensions {width}x{height} must be positive"
        )));
    }
    let dx = (pred.x - gt.x).abs() / width;
    let dw = (pred.w - gt.w).abs() / width;
    let dy = (pred.y - gt.y).abs() / height;
    let dh = (pred.h - gt.h).abs() / height;
    Ok((dx + dy + dw + dh) / 4.0)
}

/// `1 - giou`, in `[0, 2)`.
pub fn giou_loss(pred: &BBox, gt: &BBox) -> f64 {
    1.0 - giou(pred, gt)
}

/// Weighted total with the training weights `cls + 2*iou + 5*l1`.
pub fn total_loss(cls: f64, iou_loss: f64, l1: f64) -> f64 {
    total_loss_weighted(cls, iou_loss, l1, LAMBDA_IOU, LAMBDA_L1)
}

pub fn total_loss_weighted(
    cls: f64,
    iou_loss: f64,
    l1: f64,
    lambda_iou: f64,
    lambda_l1: f64,
) -> f64 {
    cls + lambda_iou * iou_loss + lambda_l1 * l1
}
