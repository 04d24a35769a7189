//! Detection-image to tracking-pair conversion with hybrid sampling.
//!
//! Unpaired detection datasets become template/search training pairs: the
//! target and a larger context window are cropped from one image, and the
//! search crop is randomly augmented (grayscale, horizontal flip, Gaussian
//! noise, Gaussian blur, small rotation), each op firing independently
//! with its configured probability. An epoch scheduler samples across
//! datasets by weight so underwater and open-air sources mix at the
//! configured ratio. Every pair is reproducible from its recorded seed.

mod raster;

pub use raster::{rotate_box_hull, Raster};

use crate::error::{Error, Result};
use crate::geometry::BBox;
use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

/// Template crop edge in pixels.
pub const TEMPLATE_SIZE: u32 = 128;
/// Search crop edge in pixels.
pub const SEARCH_SIZE: u32 = 256;
/// Context factor for the template crop.
pub const TEMPLATE_FACTOR: f64 = 2.0;
/// Context factor for the search crop.
pub const SEARCH_FACTOR: f64 = 4.0;

/// Source domain of a detection dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    #[serde(rename = "underwater")]
    Underwater,
    #[serde(rename = "open-air")]
    OpenAir,
}

/// One detection image with its annotated boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub image: PathBuf,
    pub boxes: Vec<BBox>,
    pub domain: Domain,
    pub dataset: String,
}

/// Read a line-delimited detection manifest.
pub fn read_detection_manifest<R: BufRead>(reader: R) -> Result<Vec<DetectionRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DetectionRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(idx + 1, format!("invalid detection record: {e}")))?;
        if record.boxes.is_empty() {
            return Err(Error::format(idx + 1, "record has no boxes"));
        }
        if record.boxes.iter().any(BBox::is_degenerate) {
            return Err(Error::format(idx + 1, "record contains a degenerate box"));
        }
        records.push(record);
    }
    Ok(records)
}

pub fn read_detection_manifest_from_path(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>> {
    read_detection_manifest(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Independent firing probabilities and parameters of the five
/// augmentation ops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentationConfig {
    pub p_grayscale: f64,
    pub p_hflip: f64,
    pub p_noise: f64,
    pub p_blur: f64,
    pub p_rotate: f64,
    pub rotate_min_deg: f64,
    pub rotate_max_deg: f64,
    /// Noise std as a fraction of full scale.
    pub noise_sigma: f64,
    /// Odd blur kernel edge.
    pub blur_kernel: usize,
    pub blur_sigma: f64,
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            p_grayscale: 0.10,
            p_hflip: 0.15,
            p_noise: 0.05,
            p_blur: 0.05,
            p_rotate: 0.05,
            rotate_min_deg: 0.0,
            rotate_max_deg: 10.0,
            noise_sigma: 5.0 / 255.0,
            blur_kernel: 5,
            blur_sigma: 1.0,
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_grayscale", self.p_grayscale),
            ("p_hflip", self.p_hflip),
            ("p_noise", self.p_noise),
            ("p_blur", self.p_blur),
            ("p_rotate", self.p_rotate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config(format!("{name} {p} outside [0, 1]")));
            }
        }
        if !(0.0 <= self.rotate_min_deg && self.rotate_min_deg <= self.rotate_max_deg) {
            return Err(Error::config("rotation range must satisfy 0 <= min <= max"));
        }
        if self.noise_sigma < 0.0 {
            return Err(Error::config("noise_sigma must be non-negative"));
        }
        if self.blur_kernel.is_multiple_of(2) || self.blur_kernel == 0 {
            return Err(Error::config("blur_kernel must be odd and positive"));
        }
        if self.blur_sigma <= 0.0 {
            return Err(Error::config("blur_sigma must be positive"));
        }
        Ok(())
    }
}

/// Augmentations applied to one search crop, in application order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppliedOp {
    Grayscale,
    Hflip,
    Noise,
    Blur,
    /// Rotation with its sampled angle in degrees.
    Rotate(f64),
}

/// Apply the five ops in fixed order (grayscale, hflip, noise, blur,
/// rotate); each decision and parameter draw comes from the seeded
/// generator, so a `(seed, config)` pair reproduces the output exactly.
/// Horizontal flip mirrors the box; rotation replaces it with the clamped
/// axis-aligned hull of its rotated corners.
pub fn augment(
    search: &Raster,
    search_box: &BBox,
    config: &AugmentationConfig,
    seed: u64,
) -> Result<(Raster, BBox, Vec<AppliedOp>)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = search.clone();
    let mut bbox = *search_box;
    let mut applied = Vec::new();

    if rng.random::<f64>() < config.p_grayscale {
        out = out.grayscale();
        applied.push(AppliedOp::Grayscale);
    }
    if rng.random::<f64>() < config.p_hflip {
        bbox = BBox::new(out.width() as f64 - bbox.x - bbox.w, bbox.y, bbox.w, bbox.h);
        out = out.hflip();
        applied.push(AppliedOp::Hflip);
    }
    if rng.random::<f64>() < config.p_noise {
        out = out.add_noise(config.noise_sigma, &mut rng);
        applied.push(AppliedOp::Noise);
    }
    if rng.random::<f64>() < config.p_blur {
        out = out.gaussian_blur(config.blur_kernel, config.blur_sigma);
        applied.push(AppliedOp::Blur);
    }
    if rng.random::<f64>() < config.p_rotate {
        let angle = rng.random_range(config.rotate_min_deg..=config.rotate_max_deg);
        bbox = rotate_box_hull(&bbox, angle, out.width(), out.height());
        out = out.rotate(angle);
        applied.push(AppliedOp::Rotate(angle));
    }

    Ok((out, bbox, applied))
}

/// Crop the template and search windows around `target`: square crops of
/// side `sqrt(w*h) * factor` centered on the target, mean-padded where
/// they leave the image, resized to the fixed pair sizes. Returns the
/// target box mapped into search coordinates.
pub fn crop_pair(
    image: &Raster,
    target: &BBox,
    template_factor: f64,
    search_factor: f64,
) -> Result<(Raster, Raster, BBox)> {
    if target.is_degenerate() {
        return Err(Error::DegenerateBox);
    }
    if template_factor <= 1.0 || search_factor <= 1.0 {
        return Err(Error::config("crop factors must exceed 1"));
    }
    let img_w = image.width() as f64;
    let img_h = image.height() as f64;
    if target.x >= img_w || target.y >= img_h || target.right() <= 0.0 || target.bottom() <= 0.0 {
        return Err(Error::config("target box lies fully outside the image"));
    }

    let (cx, cy) = target.center();
    let base = (target.w * target.h).sqrt();

    let crop = |factor: f64, out_size: u32| -> (Raster, f64, f64, f64) {
        let side = base * factor;
        let x0 = cx - side / 2.0;
        let y0 = cy - side / 2.0;
        let fill = image
            .region_means(x0, y0, x0 + side, y0 + side)
            .unwrap_or([127.5; 3]);
        (image.crop_resize(x0, y0, side, out_size, fill), x0, y0, side)
    };

    let (template, _, _, _) = crop(template_factor, TEMPLATE_SIZE);
    let (search, sx0, sy0, s_side) = crop(search_factor, SEARCH_SIZE);

    let scale = SEARCH_SIZE as f64 / s_side;
    let search_box = BBox::new(
        (target.x - sx0) * scale,
        (target.y - sy0) * scale,
        target.w * scale,
        target.h * scale,
    );
    Ok((template, search, search_box))
}

/// A finished training pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub template: Raster,
    pub search: Raster,
    pub search_box: BBox,
    pub applied_ops: Vec<AppliedOp>,
    pub seed: u64,
}

/// Crop and augment one pair from an image and target box.
pub fn generate_pair(
    image: &Raster,
    target: &BBox,
    aug: &AugmentationConfig,
    seed: u64,
) -> Result<SamplePair> {
    let (template, search, search_box) = crop_pair(image, target, TEMPLATE_FACTOR, SEARCH_FACTOR)?;
    let (search, search_box, applied_ops) = augment(&search, &search_box, aug, seed)?;
    Ok(SamplePair {
        template,
        search,
        search_box,
        applied_ops,
        seed,
    })
}

/// Epoch scheduling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerConfig {
    /// Per-dataset weights; an empty map means equal weights for every
    /// dataset present in the pool. Datasets missing from a non-empty map
    /// are excluded.
    pub weights: BTreeMap<String, f64>,
    pub epoch_size: usize,
    /// Open-air to underwater draw ratio. When set and both domains are
    /// present, domain totals are rescaled to hit the ratio while keeping
    /// intra-domain proportions.
    pub target_ratio: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            weights: BTreeMap::new(),
            epoch_size: 30_000,
            target_ratio: Some(2.0),
        }
    }
}

/// One planned pair: enough to regenerate it without re-sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSpec {
    pub index: usize,
    pub dataset: String,
    pub image: PathBuf,
    pub box_index: usize,
    pub seed: u64,
}

/// Draw an epoch manifest: dataset by weight, image uniformly within the
/// dataset, target box uniformly within the image.
pub fn sample_epoch(
    records: &[DetectionRecord],
    sampler: &SamplerConfig,
    seed: u64,
) -> Result<Vec<PairSpec>> {
    if sampler.epoch_size == 0 {
        return Err(Error::config("epoch_size must be positive"));
    }
    if let Some(ratio) = sampler.target_ratio {
        if !(ratio.is_finite() && ratio > 0.0) {
            return Err(Error::config(format!(
                "target_ratio {ratio} must be positive"
            )));
        }
    }

    // group usable records by dataset
    let mut by_dataset: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in records.iter().enumerate() {
        if !r.boxes.is_empty() {
            by_dataset.entry(r.dataset.as_str()).or_default().push(i);
        }
    }

    let mut names: Vec<&str> = Vec::new();
    let mut weights: Vec<f64> = Vec::new();
    for (&name, indices) in &by_dataset {
        let weight = if sampler.weights.is_empty() {
            1.0
        } else {
            sampler.weights.get(name).copied().unwrap_or(0.0)
        };
        if weight < 0.0 {
            return Err(Error::config(format!("weight for '{name}' is negative")));
        }
        if weight > 0.0 && !indices.is_empty() {
            names.push(name);
            weights.push(weight);
        }
    }
    if names.is_empty() {
        return Err(Error::config("empty pool: no dataset with positive weight"));
    }

    if let Some(ratio) = sampler.target_ratio {
        let domain_of = |name: &str| -> Domain {
            let idx = by_dataset[name][0];
            records[idx].domain
        };
        let open_total: f64 = names
            .iter()
            .zip(&weights)
            .filter(|(n, _)| domain_of(n) == Domain::OpenAir)
            .map(|(_, w)| w)
            .sum();
        let under_total: f64 = names
            .iter()
            .zip(&weights)
            .filter(|(n, _)| domain_of(n) == Domain::Underwater)
            .map(|(_, w)| w)
            .sum();
        if open_total > 0.0 && under_total > 0.0 {
            let open_share = ratio / (ratio + 1.0);
            let under_share = 1.0 / (ratio + 1.0);
            for (name, w) in names.iter().zip(weights.iter_mut()) {
                *w = match domain_of(name) {
                    Domain::OpenAir => *w / open_total * open_share,
                    Domain::Underwater => *w / under_total * under_share,
                };
            }
        }
    }

    let dist = WeightedIndex::new(&weights).map_err(|e| Error::config(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = Vec::with_capacity(sampler.epoch_size);
    for index in 0..sampler.epoch_size {
        let dataset = names[rng.sample(&dist)];
        let pool = &by_dataset[dataset];
        let record = &records[pool[rng.random_range(0..pool.len())]];
        let box_index = rng.random_range(0..record.boxes.len());
        manifest.push(PairSpec {
            index,
            dataset: dataset.to_string(),
            image: record.image.clone(),
            box_index,
            seed: rng.random::<u64>(),
        });
    }
    Ok(manifest)
}

/// Output-manifest line for one written pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub index: usize,
    pub dataset: String,
    pub image: PathBuf,
    #[serde(rename = "box")]
    pub target: BBox,
    pub search_box: BBox,
    pub applied_ops: Vec<AppliedOp>,
    pub seed: u64,
}

pub fn write_pair_manifest<W: Write>(mut writer: W, records: &[PairRecord]) -> Result<()> {
    for record in records {
        let line = serde_json::to_string(record).expect("pair record serializes");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn read_pair_manifest<R: BufRead>(reader: R) -> Result<Vec<PairRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format(idx + 1, format!("invalid pair record: {e}")))?;
        records.push(record);
    }
    Ok(records)
}
