//! Candidate extraction from a tracker response frame.
//!
//! A response frame is the head output for one frame: an `s x s` grid of
//! patches, each carrying a similarity score and a decoded box. The final
//! per-frame candidate set keeps the top-n patches by score and filters
//! near-duplicates with NMS; the pre-NMS maximum always survives because
//! greedy NMS keeps it first.

use crate::error::{Error, Result};
use crate::geometry::{self, BBox, ScoredBox};
use serde::{Deserialize, Serialize};

/// Grid side used by the 256-patch response layout.
pub const DEFAULT_GRID_SIZE: usize = 16;
/// Default candidate-set size (the UOT100 run setting).
pub const DEFAULT_CANDIDATES: usize = 40;
/// Candidate-set size used for UTB180 runs.
pub const UTB180_CANDIDATES: usize = 30;
/// Default NMS threshold for candidate filtering.
pub const DEFAULT_NMS_THRESHOLD: f64 = 0.5;

/// One patch of a response frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResponseEntry {
    pub patch_index: usize,
    pub score: f64,
    #[serde(rename = "box")]
    pub bbox: BBox,
}

/// A full response frame: exactly `grid_size^2` entries, one per patch.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseFrame {
    grid_size: usize,
    entries: Vec<ResponseEntry>,
}

impl ResponseFrame {
    /// Validates the grid contract: `grid_size^2` entries, every patch index
    /// present exactly once, scores within `[0, 1]`.
    pub fn new(grid_size: usize, entries: Vec<ResponseEntry>) -> Result<Self> {
        let expected = grid_size * grid_size;
        if grid_size == 0 {
            return Err(Error::InvalidResponseFrame("grid_size is zero".into()));
        }
        if entries.len() != expected {
            return Err(Error::InvalidResponseFrame(format!(
                "expected {expected} entries for grid size {grid_size}, got {}",
                entries.len()
            )));
        }
        let mut seen = vec![false; expected];
        for e in &entries {
            if e.patch_index >= expected {
                return Err(Error::InvalidResponseFrame(format!(
                    "patch index {} out of range 0..{expected}",
                    e.patch_index
                )));
            }
            if seen[e.patch_index] {
                return Err(Error::InvalidResponseFrame(format!(
                    "duplicate patch index {}",
                    e.patch_index
                )));
            }
            seen[e.patch_index] = true;
            if !e.score.is_finite() || !(0.0..=1.0).contains(&e.score) {
                return Err(Error::InvalidResponseFrame(format!(
                    "patch {} score {} outside [0, 1]",
                    e.patch_index, e.score
                )));
            }
        }
        Ok(Self { grid_size, entries })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn entries(&self) -> &[ResponseEntry] {
        &self.entries
    }

    /// Entries sorted by descending score, ties broken by lower patch index.
    pub(crate) fn top_n_pool(&self, n: usize) -> Vec<&ResponseEntry> {
        let mut refs: Vec<&ResponseEntry> = self.entries.iter().collect();
        refs.sort_by(|a, b| {
            b.score
                .total_cmp(&a.score)
                .then(a.patch_index.cmp(&b.patch_index))
        });
        refs.truncate(n);
        refs
    }
}

/// Scored boxes surviving top-n selection and NMS, descending by score.
/// The first item is always the frame's maximum-response box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<ScoredBox>", try_from = "Vec<ScoredBox>")]
pub struct CandidateSet {
    items: Vec<ScoredBox>,
    n_requested: usize,
}

impl CandidateSet {
    pub fn items(&self) -> &[ScoredBox] {
        &self.items
    }

    pub fn n_requested(&self) -> usize {
        self.n_requested
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl From<CandidateSet> for Vec<ScoredBox> {
    fn from(set: CandidateSet) -> Self {
        set.items
    }
}

impl TryFrom<Vec<ScoredBox>> for CandidateSet {
    type Error = String;

    fn try_from(items: Vec<ScoredBox>) -> std::result::Result<Self, String> {
        if items.windows(2).any(|w| w[0].score < w[1].score) {
            return Err("candidate scores are not non-increasing".into());
        }
        let n_requested = items.len();
        Ok(CandidateSet { items, n_requested })
    }
}

/// Top-n selection followed by NMS.
pub fn extract(frame: &ResponseFrame, n: usize, nms_threshold: f64) -> Result<CandidateSet> {
    let patches = frame.grid_size() * frame.grid_size();
    if n == 0 || n > patches {
        return Err(Error::config(format!(
            "candidate count {n} outside 1..={patches}"
        )));
    }
    if !(0.0..=1.0).contains(&nms_threshold) {
        return Err(Error::config(format!(
            "nms threshold {nms_threshold} outside [0, 1]"
        )));
    }
    let pool: Vec<ScoredBox> = frame
        .top_n_pool(n)
        .into_iter()
        .map(|e| ScoredBox::new(e.bbox, e.score))
        .collect();
    let items = geometry::nms(&pool, nms_threshold);
    Ok(CandidateSet {
        items,
        n_requested: n,
    })
}
