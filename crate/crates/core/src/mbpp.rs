//! Motion-based post-processing: drift detection and candidate relocation.
//!
//! Per frame the session predicts the estimation box from its Kalman
//! filter, accepts the tracker's max-response box while the two still
//! overlap by at least `conf`, and otherwise relocates the target to the
//! candidate maximizing `similarity x IoU(candidate, estimation box)`.
//! The decision path contains no randomness.

use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::geometry::{iou, BBox, ScoredBox};
use crate::kalman::{self, FilterConfig, TrackState};
use serde::{Deserialize, Serialize};

/// Drift gate from the benchmark run settings.
pub const DEFAULT_CONF: f64 = 0.6;

/// Which box feeds the filter's measurement update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdatePolicy {
    /// Update with the emitted (possibly relocated) box every frame.
    #[default]
    Always,
    /// Update only on frames where the max-response box was accepted;
    /// the filter coasts on its prediction through relocations.
    AcceptedOnly,
}

/// Output when drift is detected but no candidate overlaps the estimation
/// box (all location scores are zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// Fail open: emit the max-response box so a stale motion estimate
    /// cannot freeze the tracker.
    #[default]
    MaxResponse,
    /// Emit the estimation box itself.
    EstimationBox,
}

/// Drift-handling parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MbppConfig {
    /// IoU gate: drift is declared when `iou(max, estimation) < conf`.
    pub conf: f64,
    pub update_policy: UpdatePolicy,
    pub fallback: Fallback,
}

impl Default for MbppConfig {
    fn default() -> Self {
        Self {
            conf: DEFAULT_CONF,
            update_policy: UpdatePolicy::default(),
            fallback: Fallback::default(),
        }
    }
}

impl MbppConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.conf.is_finite() || !(0.0..=1.0).contains(&self.conf) {
            return Err(Error::config(format!(
                "conf {} outside [0, 1]",
                self.conf
            )));
        }
        Ok(())
    }
}

/// One frame of tracker output: the max-response box and the candidate set
/// it leads (the wire unit of the candidate-stream format).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FrameObservationWire")]
pub struct FrameObservation {
    pub frame: u64,
    pub max: ScoredBox,
    pub candidates: CandidateSet,
}

#[derive(Deserialize)]
struct FrameObservationWire {
    frame: u64,
    max: ScoredBox,
    candidates: CandidateSet,
}

impl TryFrom<FrameObservationWire> for FrameObservation {
    type Error = String;

    fn try_from(wire: FrameObservationWire) -> std::result::Result<Self, String> {
        FrameObservation::new(wire.frame, wire.max, wire.candidates).map_err(|e| e.to_string())
    }
}

impl FrameObservation {
    /// Validates that candidates are non-empty and led by the max box.
    pub fn new(frame: u64, max: ScoredBox, candidates: CandidateSet) -> Result<Self> {
        if candidates.is_empty() {
            return Err(Error::NoCandidates);
        }
        if candidates.items()[0] != max {
            return Err(Error::format(
                0,
                "candidates[0] does not equal the max-response box",
            ));
        }
        Ok(Self {
            frame,
            max,
            candidates,
        })
    }
}

/// Eq. of the relocation ranking: candidate similarity times its IoU with
/// the estimation box.
pub fn location_score(candidate: &ScoredBox, estimation: &BBox) -> f64 {
    candidate.score * iou(&candidate.bbox, estimation)
}

/// Per-frame decision record.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepDiagnostics {
    /// The Kalman estimation box for this frame.
    pub estimation_box: BBox,
    /// IoU between the max-response box and the estimation box.
    pub gate_iou: f64,
    pub drift_detected: bool,
    /// Index of the emitted candidate (0 is the max box); `None` when the
    /// fallback path was taken.
    pub chosen_index: Option<usize>,
    /// Location scores for every candidate; empty when drift was not
    /// detected (the scores are only computed on the relocation path).
    pub location_scores: Vec<f64>,
    /// The box decode clamped a collapsing area or aspect this frame.
    pub clamped: bool,
}

/// Single-target tracking session: one Kalman filter plus the drift gate.
/// Step calls must be serialized per session; sessions are independent.
#[derive(Debug, Clone)]
pub struct TrackerSession {
    kf: TrackState,
    mbpp: MbppConfig,
    filter: FilterConfig,
    last_output: BBox,
    frame_count: u64,
}

/// Start a session on the first-frame target box.
pub fn start(init_box: &BBox, mbpp: MbppConfig, filter: FilterConfig) -> Result<TrackerSession> {
    mbpp.validate()?;
    let kf = kalman::init(init_box, &filter)?;
    Ok(TrackerSession {
        kf,
        mbpp,
        filter,
        last_output: *init_box,
        frame_count: 0,
    })
}

impl TrackerSession {
    pub fn last_output(&self) -> &BBox {
        &self.last_output
    }

    pub fn frame_count(&self) -> u64 {
        self.frame_count
    }

    pub fn config(&self) -> &MbppConfig {
        &self.mbpp
    }

    /// Process one frame: predict, gate, relocate if drifted, update.
    pub fn step(&mut self, obs: &FrameObservation) -> Result<(BBox, StepDiagnostics)> {
        if obs.candidates.is_empty() {
            return Err(Error::NoCandidates);
        }

        let pred = kalman::predict(&self.kf, &self.filter);
        let estimation = pred.estimation_box;
        let gate_iou = iou(&obs.max.bbox, &estimation);

        let drift_detected = gate_iou < self.mbpp.conf;
        let (output, chosen_index, location_scores) = if !drift_detected {
            (obs.max.bbox, Some(0), Vec::new())
        } else {
            let scores: Vec<f64> = obs
                .candidates
                .items()
                .iter()
                .map(|c| location_score(c, &estimation))
                .collect();
            // strict > keeps the earliest (highest-similarity) candidate on ties
            let (best_idx, best_score) = scores
                .iter()
                .copied()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (i, s)| {
                    if s > acc.1 {
                        (i, s)
                    } else {
                        acc
                    }
                });
            if best_score > 0.0 {
                (obs.candidates.items()[best_idx].bbox, Some(best_idx), scores)
            } else {
                let fallback_box = match self.mbpp.fallback {
                    Fallback::MaxResponse => obs.max.bbox,
                    Fallback::EstimationBox => estimation,
                };
                (fallback_box, None, scores)
            }
        };

        let measurement = match self.mbpp.update_policy {
            UpdatePolicy::Always => Some(output),
            UpdatePolicy::AcceptedOnly if !drift_detected => Some(output),
            UpdatePolicy::AcceptedOnly => None,
        };
        self.kf = match measurement {
            // a degenerate emitted box carries no area/aspect measurement
            Some(m) if !m.is_degenerate() => kalman::update(&pred.state, &m, &self.filter)?,
            _ => kalman::coast(&pred.state),
        };

        self.frame_count += 1;
        self.last_output = output;
        debug_assert_eq!(self.kf.frame_index(), self.frame_count);

        let diagnostics = StepDiagnostics {
            estimation_box: estimation,
            gate_iou,
            drift_detected,
            chosen_index,
            location_scores,
            clamped: pred.clamped,
        };
        Ok((output, diagnostics))
    }
}

/// Batch driver: run a whole observation stream through one session.
///
/// Frames must be contiguous starting at 1 (frame 0 is the init frame).
/// The returned trajectory has one box per frame with the init box first,
/// matching the one-pass evaluation convention.
pub fn run_sequence(
    observations: &[FrameObservation],
    init_box: &BBox,
    mbpp: MbppConfig,
    filter: FilterConfig,
) -> Result<(Vec<BBox>, Vec<StepDiagnostics>)> {
    let mut session = start(init_box, mbpp, filter)?;
    let mut trajectory = Vec::with_capacity(observations.len() + 1);
    let mut diagnostics = Vec::with_capacity(observations.len());
    trajectory.push(*init_box);

    for (i, obs) in observations.iter().enumerate() {
        let expected = i as u64 + 1;
        if obs.frame != expected {
            return Err(Error::NonContiguousFrames {
                expected,
                got: obs.frame,
            });
        }
        let (bbox, diag) = session.step(obs)?;
        trajectory.push(bbox);
        diagnostics.push(diag);
    }
    Ok((trajectory, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn candidate_set(items: Vec<ScoredBox>) -> CandidateSet {
        CandidateSet::try_from(items).unwrap()
    }

    fn obs(frame: u64, max: ScoredBox, rest: Vec<ScoredBox>) -> FrameObservation {
        let mut items = vec![max];
        items.extend(rest);
        FrameObservation::new(frame, max, candidate_set(items)).unwrap()
    }

    #[test]
    fn start_records_init_box() {
        let init = BBox::new(10.0, 10.0, 20.0, 20.0);
        let session = start(&init, MbppConfig::default(), FilterConfig::default()).unwrap();
        assert_eq!(session.last_output(), &init);
        assert_eq!(session.frame_count(), 0);
    }

    #[test]
    fn start_rejects_degenerate_box() {
        assert!(matches!(
            start(
                &BBox::new(0.0, 0.0, 0.0, 0.0),
                MbppConfig::default(),
                FilterConfig::default()
            ),
            Err(Error::DegenerateBox)
        ));
    }

    #[test]
    fn static_target_passes_gate() {
        let init = BBox::new(10.0, 10.0, 20.0, 20.0);
        let mut session = start(&init, MbppConfig::default(), FilterConfig::default()).unwrap();
        let (out, diag) = session.step(&obs(1, ScoredBox::new(init, 0.9), vec![])).unwrap();
        assert_eq!(out, init);
        assert!(!diag.drift_detected);
        assert_eq!(diag.gate_iou, 1.0);
        assert_eq!(diag.chosen_index, Some(0));
        assert!(diag.location_scores.is_empty());
    }

    #[test]
    fn location_score_is_similarity_times_iou() {
        let estimation = BBox::new(0.0, 0.0, 10.0, 10.0);
        // IoU 0.5: contained half box
        let half = ScoredBox::new(BBox::new(0.0, 0.0, 5.0, 10.0), 0.8);
        assert!((location_score(&half, &estimation) - 0.4).abs() < 1e-12);

        let disjoint = ScoredBox::new(BBox::new(50.0, 50.0, 10.0, 10.0), 0.99);
        assert_eq!(location_score(&disjoint, &estimation), 0.0);
    }

    #[test]
    fn motion_veto_of_stronger_appearance_match() {
        let estimation = BBox::new(0.0, 0.0, 10.0, 10.0);
        // score 0.9 with IoU 0.2 loses to score 0.5 with IoU 0.6
        let strong_far = ScoredBox::new(BBox::new(20.0 / 3.0, 0.0, 10.0, 10.0), 0.9);
        let weak_near = ScoredBox::new(BBox::new(2.5, 0.0, 10.0, 10.0), 0.5);
        let s1 = location_score(&strong_far, &estimation);
        let s2 = location_score(&weak_near, &estimation);
        assert!((s1 - 0.9 * 0.2).abs() < 1e-12);
        assert!((s2 - 0.5 * 0.6).abs() < 1e-12);
        assert!(s2 > s1);
    }

    #[test]
    fn drift_relocates_to_best_location_score() {
        let init = BBox::new(0.0, 0.0, 10.0, 10.0);
        let mut session = start(&init, MbppConfig::default(), FilterConfig::default()).unwrap();

        // estimation box on frame 1 is the init box (zero initial velocity)
        let far = ScoredBox::new(BBox::new(90.0 / 11.0, 0.0, 10.0, 10.0), 0.9); // IoU 0.1
        let near = ScoredBox::new(BBox::new(10.0 / 9.0, 0.0, 10.0, 10.0), 0.7); // IoU 0.8
        let (out, diag) = session.step(&obs(1, far, vec![near])).unwrap();

        assert!(diag.drift_detected);
        assert!((diag.gate_iou - 0.1).abs() < 1e-9);
        assert_eq!(out, near.bbox);
        assert_eq!(diag.chosen_index, Some(1));
        assert_eq!(diag.location_scores.len(), 2);
        assert!((diag.location_scores[0] - 0.09).abs() < 1e-9);
        assert!((diag.location_scores[1] - 0.56).abs() < 1e-9);
    }

    #[test]
    fn single_candidate_degenerates_to_dbpp() {
        let init = BBox::new(0.0, 0.0, 10.0, 10.0);
        let mut session = start(&init, MbppConfig::default(), FilterConfig::default()).unwrap();
        // IoU with the estimation box is ~0.23, below conf, but it is the
        // only candidate: argmax over one returns it
        let lone = ScoredBox::new(BBox::new(5.0, 2.0, 10.0, 10.0), 0.8);
        let (out, diag) = session.step(&obs(1, lone, vec![])).unwrap();
        assert!(diag.drift_detected);
        assert_eq!(out, lone.bbox);
        assert_eq!(diag.chosen_index, Some(0));
    }

    #[test]
    fn all_zero_scores_fall_back_to_max_response() {
        let init = BBox::new(0.0, 0.0, 10.0, 10.0);
        let mut session = start(&init, MbppConfig::default(), FilterConfig::default()).unwrap();
        let far_a = ScoredBox::new(BBox::new(100.0, 100.0, 10.0, 10.0), 0.9);
        let far_b = ScoredBox::new(BBox::new(200.0, 200.0, 10.0, 10.0), 0.8);
        let (out, diag) = session.step(&obs(1, far_a, vec![far_b])).unwrap();
        assert!(diag.drift_detected);
        assert_eq!(out, far_a.bbox);
        assert_eq!(diag.chosen_index, None);
    }

    #[test]
    fn all_zero_scores_fall_back_to_estimation_box_when_configured() {
        let init = BBox::new(0.0, 0.0, 10.0, 10.0);
        let config = MbppConfig {
            fallback: Fallback::EstimationBox,
            ..MbppConfig::default()
        };
        let mut session = start(&init, config, FilterConfig::default()).unwrap();
        let far = ScoredBox::new(BBox::new(100.0, 100.0, 10.0, 10.0), 0.9);
        let (out, diag) = session.step(&obs(1, far, vec![])).unwrap();
        assert_eq!(out, diag.estimation_box);
        assert_eq!(diag.chosen_index, None);
    }

    #[test]
    fn accepted_only_policy_coasts_through_drift() {
        let init = BBox::new(0.0, 0.0, 10.0, 10.0);
        let config = MbppConfig {
            update_policy: UpdatePolicy::AcceptedOnly,
            ..MbppConfig::default()
        };
        let mut session = start(&init, config, FilterConfig::default()).unwrap();
        let far = ScoredBox::new(BBox::new(100.0, 100.0, 10.0, 10.0), 0.9);
        session.step(&obs(1, far, vec![])).unwrap();
        // frame counter advanced even though no measurement was folded in
        assert_eq!(session.frame_count(), 1);
    }

    #[test]
    fn no_drift_sequence_equals_max_box_sequence() {
        let init = BBox::new(0.0, 0.0, 20.0, 20.0);
        let observations: Vec<FrameObservation> = (1..=30u64)
            .map(|k| {
                let bbox = BBox::new(1.5 * k as f64, 0.5 * k as f64, 20.0, 20.0);
                obs(
                    k,
                    ScoredBox::new(bbox, 0.85),
                    vec![ScoredBox::new(BBox::new(300.0, 300.0, 20.0, 20.0), 0.4)],
                )
            })
            .collect();

        let (traj, diags) = run_sequence(
            &observations,
            &init,
            MbppConfig::default(),
            FilterConfig::default(),
        )
        .unwrap();

        assert!(diags.iter().all(|d| !d.drift_detected));
        assert_eq!(traj[0], init);
        for (t, o) in traj[1..].iter().zip(&observations) {
            assert_eq!(t, &o.max.bbox);
        }
    }

    #[test]
    fn run_sequence_is_deterministic() {
        let init = BBox::new(0.0, 0.0, 20.0, 20.0);
        let observations: Vec<FrameObservation> = (1..=10u64)
            .map(|k| {
                obs(
                    k,
                    ScoredBox::new(BBox::new(2.0 * k as f64, 0.0, 20.0, 20.0), 0.9),
                    vec![],
                )
            })
            .collect();
        let a = run_sequence(&observations, &init, MbppConfig::default(), FilterConfig::default())
            .unwrap();
        let b = run_sequence(&observations, &init, MbppConfig::default(), FilterConfig::default())
            .unwrap();
        assert_eq!(a.0, b.0);
    }

    #[test]
    fn run_sequence_rejects_non_contiguous_frames() {
        let init = BBox::new(0.0, 0.0, 20.0, 20.0);
        let observations = vec![
            obs(1, ScoredBox::new(init, 0.9), vec![]),
            obs(3, ScoredBox::new(init, 0.9), vec![]),
        ];
        assert!(matches!(
            run_sequence(&observations, &init, MbppConfig::default(), FilterConfig::default()),
            Err(Error::NonContiguousFrames { expected: 2, got: 3 })
        ));
    }

    #[test]
    fn emitted_box_is_always_max_candidate_or_estimation() {
        let init = BBox::new(0.0, 0.0, 10.0, 10.0);
        for fallback in [Fallback::MaxResponse, Fallback::EstimationBox] {
            let config = MbppConfig {
                fallback,
                ..MbppConfig::default()
            };
            let mut session = start(&init, config, FilterConfig::default()).unwrap();
            for k in 1..=40u64 {
                // alternate plausible and wild max boxes
                let max_bbox = if k % 3 == 0 {
                    BBox::new(150.0 + k as f64, 200.0, 12.0, 9.0)
                } else {
                    BBox::new(0.2 * k as f64, 0.1 * k as f64, 10.0, 10.0)
                };
                let near = ScoredBox::new(BBox::new(0.2 * k as f64 + 1.0, 0.0, 10.0, 10.0), 0.5);
                let observation = obs(k, ScoredBox::new(max_bbox, 0.9), vec![near]);
                let (out, diag) = session.step(&observation).unwrap();
                let allowed = out == observation.max.bbox
                    || observation.candidates.items().iter().any(|c| c.bbox == out)
                    || out == diag.estimation_box;
                assert!(allowed, "frame {k} emitted a box from outside the contract");
            }
        }
    }

    #[test]
    fn frame_observation_validates_leading_max() {
        let a = ScoredBox::new(BBox::new(0.0, 0.0, 10.0, 10.0), 0.9);
        let other = ScoredBox::new(BBox::new(5.0, 5.0, 10.0, 10.0), 0.9);
        assert!(FrameObservation::new(1, a, candidate_set(vec![other, a])).is_err());
        assert!(matches!(
            FrameObservation::new(1, a, candidate_set(vec![])),
            Err(Error::NoCandidates)
        ));
    }
}
