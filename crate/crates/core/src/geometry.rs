//! Box representations, encoding conversions, overlap measures, and NMS.
//!
//! The corner encoding `(x, y, w, h)` is canonical everywhere boxes touch a
//! file; the center and area/aspect encodings are pure views used by the
//! motion model. Overlap measures are total functions: any measure involving
//! a zero-area box is 0 rather than NaN.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Axis-aligned rectangle in pixel coordinates, corner encoding.
///
/// Serialized as the 4-array `[x, y, w, h]` in every file format.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 4]", try_from = "[f64; 4]")]
pub struct BBox {
    /// Left edge.
    pub x: f64,
    /// Top edge.
    pub y: f64,
    /// Width, always >= 0.
    pub w: f64,
    /// Height, always >= 0.
    pub h: f64,
}

/// Center encoding `(cx, cy, w, h)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

/// Area/aspect encoding: center `(u, v)`, pixel area `s = w*h`, aspect
/// ratio `r = w/h`. The parameterization used by the motion model state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaAspect {
    pub u: f64,
    pub v: f64,
    pub s: f64,
    pub r: f64,
}

/// A box with a similarity score in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScoredBoxWire")]
pub struct ScoredBox {
    #[serde(rename = "box")]
    pub bbox: BBox,
    pub score: f64,
}

#[derive(Deserialize)]
struct ScoredBoxWire {
    #[serde(rename = "box")]
    bbox: BBox,
    score: f64,
}

impl TryFrom<ScoredBoxWire> for ScoredBox {
    type Error = String;

    fn try_from(wire: ScoredBoxWire) -> std::result::Result<Self, String> {
        if !wire.score.is_finite() || !(0.0..=1.0).contains(&wire.score) {
            return Err(format!("score {} outside [0, 1]", wire.score));
        }
        Ok(ScoredBox {
            bbox: wire.bbox,
            score: wire.score,
        })
    }
}

impl ScoredBox {
    pub fn new(bbox: BBox, score: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&score), "score {score} outside [0, 1]");
        Self { bbox, score }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> [f64; 4] {
        [b.x, b.y, b.w, b.h]
    }
}

impl TryFrom<[f64; 4]> for BBox {
    type Error = String;

    fn try_from(v: [f64; 4]) -> std::result::Result<Self, String> {
        if v.iter().any(|c| !c.is_finite()) {
            return Err(format!("non-finite box component in {v:?}"));
        }
        if v[2] < 0.0 || v[3] < 0.0 {
            return Err(format!("negative box size in {v:?}"));
        }
        Ok(BBox::new(v[0], v[1], v[2], v[3]))
    }
}

impl BBox {
    /// New corner-encoded box. Negative sizes are clamped to 0 so that the
    /// `w, h >= 0` invariant holds for every constructed value.
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self {
            x,
            y,
            w: w.max(0.0),
            h: h.max(0.0),
        }
    }

    /// Zero-area boxes are degenerate: every overlap measure involving one
    /// returns 0.
    pub fn is_degenerate(&self) -> bool {
        self.w * self.h == 0.0
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }

    /// Center point `(cx, cy)`.
    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn to_center(&self) -> CenterBox {
        let (cx, cy) = self.center();
        CenterBox {
            cx,
            cy,
            w: self.w,
            h: self.h,
        }
    }

    /// Area/aspect view. Errors on degenerate boxes: `s = 0` carries no
    /// aspect information and cannot round-trip.
    pub fn to_area_aspect(&self) -> Result<AreaAspect> {
        if self.is_degenerate() {
            return Err(Error::DegenerateBox);
        }
        let (u, v) = self.center();
        Ok(AreaAspect {
            u,
            v,
            s: self.w * self.h,
            r: self.w / self.h,
        })
    }
}

impl CenterBox {
    pub fn to_corner(&self) -> BBox {
        BBox::new(self.cx - self.w / 2.0, self.cy - self.h / 2.0, self.w, self.h)
    }
}

impl AreaAspect {
    /// Decode back to the corner encoding: `w = sqrt(s*r)`, `h = sqrt(s/r)`.
    pub fn to_corner(&self) -> BBox {
        let w = (self.s * self.r).sqrt();
        let h = (self.s / self.r).sqrt();
        BBox::new(self.u - w / 2.0, self.v - h / 2.0, w, h)
    }
}

/// Per-axis (intersection, hull) extents, computed in coordinates shifted
/// to the pair's minimum so that identical intervals overlap exactly.
fn axis_extents(a0: f64, aw: f64, b0: f64, bw: f64) -> (f64, f64) {
    let origin = a0.min(b0);
    let (a0, b0) = (a0 - origin, b0 - origin);
    let inter = ((a0 + aw).min(b0 + bw) - a0.max(b0)).max(0.0);
    let hull = (a0 + aw).max(b0 + bw);
    (inter, hull)
}

/// Intersection over union. Total: 0 whenever either box is degenerate or
/// the union is empty.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    if a.is_degenerate() || b.is_degenerate() {
        return 0.0;
    }
    let (inter_w, _) = axis_extents(a.x, a.w, b.x, b.w);
    let (inter_h, _) = axis_extents(a.y, a.h, b.y, b.h);
    let inter = inter_w * inter_h;
    let union = a.area() + b.area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    inter / union
}

/// Generalized IoU: `iou - (hull - union) / hull` where hull is the smallest
/// enclosing box. Equals IoU when the hull coincides with the union; tends
/// to -1 as disjoint boxes separate. 0 for degenerate inputs.
pub fn giou(a: &BBox, b: &BBox) -> f64 {
    if a.is_degenerate() || b.is_degenerate() {
        return 0.0;
    }
    let (inter_w, hull_w) = axis_extents(a.x, a.w, b.x, b.w);
    let (inter_h, hull_h) = axis_extents(a.y, a.h, b.y, b.h);
    let inter = inter_w * inter_h;
    let union = a.area() + b.area() - inter;
    let hull = hull_w * hull_h;
    if union <= 0.0 || hull <= 0.0 {
        return 0.0;
    }
    inter / union - (hull - union) / hull
}

/// Greedy non-maximum suppression.
///
/// Sorts descending by score (stable: ties keep input order), repeatedly
/// keeps the top box and drops every remaining box with IoU >= `threshold`
/// against it. Suppression at exactly the threshold is intentional and part
/// of the format contract.
pub fn nms(candidates: &[ScoredBox], iou_threshold: f64) -> Vec<ScoredBox> {
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    // sort_by is stable, so equal scores keep input order
    order.sort_by(|&i, &j| candidates[j].score.total_cmp(&candidates[i].score));

    let mut kept: Vec<ScoredBox> = Vec::new();
    let mut suppressed = vec![false; candidates.len()];
    for (pos, &i) in order.iter().enumerate() {
        if suppressed[i] {
            continue;
        }
        kept.push(candidates[i]);
        for &j in &order[pos + 1..] {
            if !suppressed[j] && iou(&candidates[i].bbox, &candidates[j].bbox) >= iou_threshold {
                suppressed[j] = true;
            }
        }
    }
    kept
}
