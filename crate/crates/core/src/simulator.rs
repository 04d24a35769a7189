//! Deterministic synthetic scenes with similar-appearance distractors.
//!
//! The simulator stands in for a neural tracker: agents move through an
//! arena under constant velocity with Gaussian perturbation and wall
//! reflection, and every frame each agent emits a scored box from its
//! similarity distribution. Swap events temporarily let one distractor
//! outscore the target, which makes a detection-based tracker drift;
//! occlusion events zero the target's score. Everything is driven by a
//! single seeded generator, so identical configs produce byte-identical
//! sequences.

use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::geometry::{BBox, ScoredBox};
use crate::mbpp::FrameObservation;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// A frame interval `[start, start + duration)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub start: usize,
    pub duration: usize,
}

impl Event {
    pub fn contains(&self, frame: usize) -> bool {
        frame >= self.start && frame < self.start + self.duration
    }
}

/// Scene parameters. All distances are pixels, all rates are per frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub arena_width: f64,
    pub arena_height: f64,
    pub num_frames: usize,
    pub num_distractors: usize,
    /// Candidate-set size per frame (agents plus clutter).
    pub num_candidates: usize,
    pub speed_mean: f64,
    pub speed_std: f64,
    pub velocity_noise_std: f64,
    pub target_width: f64,
    pub target_height: f64,
    /// Per-frame multiplicative size jitter (std of the factor around 1).
    pub size_jitter_std: f64,
    pub target_score_mean: f64,
    pub target_score_std: f64,
    pub distractor_score_mean: f64,
    pub distractor_score_std: f64,
    /// Distractor score mean while a swap event is active.
    pub swap_score_mean: f64,
    /// Intervals during which one distractor outscores the target.
    pub swap_events: Vec<Event>,
    /// Intervals during which the target's score is zeroed.
    pub occlusion_events: Vec<Event>,
    pub seed: u64,
}

impl Default for SceneConfig {
    /// A scene with three look-alikes and one mid-sequence swap event;
    /// chosen so a detection-based tracker drifts reliably while the
    /// motion-gated path can recover.
    fn default() -> Self {
        Self {
            arena_width: 512.0,
            arena_height: 512.0,
            num_frames: 120,
            num_distractors: 3,
            num_candidates: 40,
            speed_mean: 2.5,
            speed_std: 0.5,
            velocity_noise_std: 0.25,
            target_width: 40.0,
            target_height: 40.0,
            size_jitter_std: 0.02,
            target_score_mean: 0.85,
            target_score_std: 0.05,
            distractor_score_mean: 0.75,
            distractor_score_std: 0.05,
            swap_score_mean: 0.95,
            swap_events: vec![Event {
                start: 40,
                duration: 20,
            }],
            occlusion_events: Vec::new(),
            seed: 1,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        let constraint = |ok: bool, message: &str| -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::config(message.to_string()))
            }
        };
        constraint(
            self.arena_width > 0.0 && self.arena_height > 0.0,
            "arena dimensions must be positive",
        )?;
        constraint(self.num_frames >= 2, "num_frames must be at least 2")?;
        constraint(
            self.target_width > 0.0 && self.target_height > 0.0,
            "target size must be positive",
        )?;
        constraint(
            self.target_width <= self.arena_width && self.target_height <= self.arena_height,
            "target size must fit inside the arena",
        )?;
        constraint(
            self.speed_std >= 0.0
                && self.velocity_noise_std >= 0.0
                && self.size_jitter_std >= 0.0
                && self.target_score_std >= 0.0
                && self.distractor_score_std >= 0.0,
            "standard deviations must be non-negative",
        )?;
        for (name, v) in [
            ("target_score_mean", self.target_score_mean),
            ("distractor_score_mean", self.distractor_score_mean),
            ("swap_score_mean", self.swap_score_mean),
        ] {
            constraint(
                (0.0..=1.0).contains(&v),
                &format!("{name} must lie in [0, 1]"),
            )?;
        }
        constraint(
            self.target_score_mean > self.distractor_score_mean,
            "target_score_mean must exceed distractor_score_mean",
        )?;
        constraint(
            self.num_candidates > self.num_distractors,
            "num_candidates must cover every agent",
        )?;
        for event in self.swap_events.iter().chain(&self.occlusion_events) {
            constraint(
                event.start < self.num_frames && event.start + event.duration <= self.num_frames,
                &format!(
                    "event [{}, {}) exceeds the frame range 0..{}",
                    event.start,
                    event.start + event.duration,
                    self.num_frames
                ),
            )?;
        }
        constraint(
            self.swap_events.is_empty() || self.num_distractors > 0,
            "swap events require at least one distractor",
        )?;
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: SceneConfig =
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("scene config serializes")
    }

    fn occluded(&self, frame: usize) -> bool {
        self.occlusion_events.iter().any(|e| e.contains(frame))
    }

    /// The distractor designated to outscore the target at `frame`, if a
    /// swap event is active.
    fn swapped_distractor(&self, frame: usize) -> Option<usize> {
        self.swap_events
            .iter()
            .enumerate()
            .find(|(_, e)| e.contains(frame))
            .map(|(idx, _)| idx % self.num_distractors)
    }
}

/// A generated scene: per-frame truth, all agent boxes, and the stream the
/// post-processing consumes (frames 1 onward; frame 0 is the init frame).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyntheticSequence {
    pub config: SceneConfig,
    pub ground_truth: Vec<BBox>,
    /// Per frame: box of every agent, target first.
    pub identities: Vec<Vec<BBox>>,
    pub stream: Vec<FrameObservation>,
}

impl SyntheticSequence {
    pub fn init_box(&self) -> &BBox {
        &self.ground_truth[0]
    }
}

struct Agent {
    cx: f64,
    cy: f64,
    vx: f64,
    vy: f64,
}

impl Agent {
    fn spawn(rng: &mut ChaCha8Rng, config: &SceneConfig) -> Self {
        let half_w = config.target_width / 2.0;
        let half_h = config.target_height / 2.0;
        let speed = Normal::new(config.speed_mean, config.speed_std)
            .expect("validated std")
            .sample(rng)
            .max(0.0);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        Agent {
            cx: rng.random_range(half_w..=config.arena_width - half_w),
            cy: rng.random_range(half_h..=config.arena_height - half_h),
            vx: speed * angle.cos(),
            vy: speed * angle.sin(),
        }
    }

    fn advance(&mut self, rng: &mut ChaCha8Rng, config: &SceneConfig) {
        let noise = Normal::new(0.0, config.velocity_noise_std).expect("validated std");
        self.vx += noise.sample(rng);
        self.vy += noise.sample(rng);

        let (lo_x, hi_x) = (
            config.target_width / 2.0,
            config.arena_width - config.target_width / 2.0,
        );
        let (lo_y, hi_y) = (
            config.target_height / 2.0,
            config.arena_height - config.target_height / 2.0,
        );

        // cushion zone near each wall: turn smoothly instead of bouncing,
        // so the motion stays close to constant-velocity frame to frame
        let margin = 1.5 * config.target_width.max(config.target_height);
        let accel = 0.3 * config.speed_mean.max(1.0);
        let cushion = |pos: f64, lo: f64, hi: f64| -> f64 {
            if pos < lo + margin {
                accel * ((lo + margin - pos) / margin).min(1.0)
            } else if pos > hi - margin {
                -accel * ((pos - (hi - margin)) / margin).min(1.0)
            } else {
                0.0
            }
        };
        self.vx += cushion(self.cx, lo_x, hi_x);
        self.vy += cushion(self.cy, lo_y, hi_y);

        // the velocity noise is a random walk; cap the speed so turns
        // stay within what a constant-velocity model tracks
        let max_speed = 2.0 * config.speed_mean.max(1.0);
        let speed = (self.vx * self.vx + self.vy * self.vy).sqrt();
        if speed > max_speed {
            self.vx *= max_speed / speed;
            self.vy *= max_speed / speed;
        }

        self.cx += self.vx;
        self.cy += self.vy;
        if self.cx < lo_x {
            self.cx = (2.0 * lo_x - self.cx).min(hi_x);
            self.vx = -self.vx;
        } else if self.cx > hi_x {
            self.cx = (2.0 * hi_x - self.cx).max(lo_x);
            self.vx = -self.vx;
        }
        if self.cy < lo_y {
            self.cy = (2.0 * lo_y - self.cy).min(hi_y);
            self.vy = -self.vy;
        } else if self.cy > hi_y {
            self.cy = (2.0 * hi_y - self.cy).max(lo_y);
            self.vy = -self.vy;
        }
    }

    fn bbox(&self, rng: &mut ChaCha8Rng, config: &SceneConfig) -> BBox {
        let jitter = Normal::new(0.0, config.size_jitter_std).expect("validated std");
        let fw = (1.0 + jitter.sample(rng)).clamp(0.2, 3.0);
        let fh = (1.0 + jitter.sample(rng)).clamp(0.2, 3.0);
        let w = (config.target_width * fw).min(config.arena_width);
        let h = (config.target_height * fh).min(config.arena_height);
        let cx = self
            .cx
            .clamp(w / 2.0, config.arena_width - w / 2.0);
        let cy = self
            .cy
            .clamp(h / 2.0, config.arena_height - h / 2.0);
        BBox::new(cx - w / 2.0, cy - h / 2.0, w, h)
    }
}

fn clamped_score(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    Normal::new(mean, std)
        .expect("validated std")
        .sample(rng)
        .clamp(0.0, 1.0)
}

/// Generate the full scene for a validated config.
pub fn generate(config: &SceneConfig) -> Result<SyntheticSequence> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let num_agents = 1 + config.num_distractors;

    let mut agents: Vec<Agent> = (0..num_agents)
        .map(|_| Agent::spawn(&mut rng, config))
        .collect();

    let mut ground_truth = Vec::with_capacity(config.num_frames);
    let mut identities = Vec::with_capacity(config.num_frames);
    let mut stream = Vec::with_capacity(config.num_frames - 1);

    for frame in 0..config.num_frames {
        if frame > 0 {
            for agent in &mut agents {
                agent.advance(&mut rng, config);
            }
        }
        let boxes: Vec<BBox> = agents
            .iter()
            .map(|a| a.bbox(&mut rng, config))
            .collect();
        ground_truth.push(boxes[0]);
        identities.push(boxes.clone());

        if frame == 0 {
            continue; // the init frame carries no observation
        }

        let mut scored: Vec<ScoredBox> = Vec::with_capacity(config.num_candidates);
        let target_score = if config.occluded(frame) {
            0.0
        } else {
            clamped_score(&mut rng, config.target_score_mean, config.target_score_std)
        };
        scored.push(ScoredBox::new(boxes[0], target_score));

        let swapped = config.swapped_distractor(frame);
        for (i, bbox) in boxes[1..].iter().enumerate() {
            let mean = if swapped == Some(i) {
                config.swap_score_mean
            } else {
                config.distractor_score_mean
            };
            scored.push(ScoredBox::new(
                *bbox,
                clamped_score(&mut rng, mean, config.distractor_score_std),
            ));
        }

        for _ in num_agents..config.num_candidates {
            let w = config.target_width * rng.random_range(0.5..1.5);
            let h = config.target_height * rng.random_range(0.5..1.5);
            let w = w.min(config.arena_width);
            let h = h.min(config.arena_height);
            let x = rng.random_range(0.0..=config.arena_width - w);
            let y = rng.random_range(0.0..=config.arena_height - h);
            scored.push(ScoredBox::new(
                BBox::new(x, y, w, h),
                clamped_score(&mut rng, 0.1, 0.05),
            ));
        }

        // stable sort: agents outrank clutter on ties
        scored.sort_by(|a, b| b.score.total_cmp(&a.score));
        scored.truncate(config.num_candidates);

        let max = scored[0];
        let candidates =
            CandidateSet::try_from(scored).map_err(|e| Error::config(e.to_string()))?;
        stream.push(FrameObservation::new(frame as u64, max, candidates)?);
    }

    Ok(SyntheticSequence {
        config: config.clone(),
        ground_truth,
        identities,
        stream,
    })
}

/// Detection-based baseline: the per-frame max-response box, no state.
pub fn dbpp_baseline(stream: &[FrameObservation]) -> Vec<BBox> {
    stream.iter().map(|obs| obs.max.bbox).collect()
}

/// Baseline as a full trajectory file would record it: init box first.
pub fn dbpp_trajectory(init_box: &BBox, stream: &[FrameObservation]) -> Vec<BBox> {
    let mut traj = Vec::with_capacity(stream.len() + 1);
    traj.push(*init_box);
    traj.extend(dbpp_baseline(stream));
    traj
}
