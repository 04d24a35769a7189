//! `trackpost pairgen`: sample an epoch from a detection manifest and
//! write template/search pairs plus the output manifest.

use crate::config::RunConfig;
use anyhow::{bail, Context, Result};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use trackpost::geometry::BBox;
use trackpost::pairgen::{
    self, DetectionRecord, PairRecord, Raster, SamplerConfig,
};

pub struct Args {
    pub config: RunConfig,
    pub manifest: PathBuf,
    pub out: PathBuf,
    pub epoch_size: usize,
    pub seed: u64,
}

pub fn run(args: Args) -> Result<()> {
    let records = pairgen::read_detection_manifest_from_path(&args.manifest)
        .with_context(|| format!("cannot read manifest {}", args.manifest.display()))?;
    if records.is_empty() {
        bail!("manifest {} has no records", args.manifest.display());
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("cannot create output directory {}", args.out.display()))?;

    let sampler = SamplerConfig {
        epoch_size: args.epoch_size,
        ..args.config.sampler.clone()
    };
    let specs = pairgen::sample_epoch(&records, &sampler, args.seed)?;

    // image paths in the manifest are relative to the manifest location
    let base = args
        .manifest
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_default();
    let mut cache: HashMap<PathBuf, Raster> = HashMap::new();
    let mut by_key: HashMap<(&str, &Path), &DetectionRecord> = HashMap::new();
    for record in &records {
        by_key.insert((record.dataset.as_str(), record.image.as_path()), record);
    }

    let mut manifest_lines = Vec::with_capacity(specs.len());
    for spec in &specs {
        let record = by_key
            .get(&(spec.dataset.as_str(), spec.image.as_path()))
            .expect("spec references a manifest record");
        let target: BBox = record.boxes[spec.box_index];

        let image_path = if record.image.is_absolute() {
            record.image.clone()
        } else {
            base.join(&record.image)
        };
        let image = match cache.get(&image_path) {
            Some(raster) => raster,
            None => {
                let raster = Raster::load(&image_path)?;
                cache.entry(image_path.clone()).or_insert(raster)
            }
        };

        let target = clamp_to_image(&target, image)?;
        let pair = pairgen::generate_pair(image, &target, &args.config.augment, spec.seed)?;

        let template_path = args.out.join(format!("{:06}_template.png", spec.index));
        let search_path = args.out.join(format!("{:06}_search.png", spec.index));
        pair.template.save_png(&template_path)?;
        pair.search.save_png(&search_path)?;

        manifest_lines.push(PairRecord {
            index: spec.index,
            dataset: spec.dataset.clone(),
            image: record.image.clone(),
            target,
            search_box: pair.search_box,
            applied_ops: pair.applied_ops,
            seed: spec.seed,
        });
    }

    let manifest_path = args.out.join("pairs.jsonl");
    let mut file = std::io::BufWriter::new(
        std::fs::File::create(&manifest_path)
            .with_context(|| format!("cannot write {}", manifest_path.display()))?,
    );
    pairgen::write_pair_manifest(&mut file, &manifest_lines)?;
    log::info!(
        "wrote {} pairs and {}",
        manifest_lines.len(),
        manifest_path.display()
    );
    Ok(())
}

fn clamp_to_image(target: &BBox, image: &Raster) -> Result<BBox> {
    let w = image.width() as f64;
    let h = image.height() as f64;
    let x0 = target.x.clamp(0.0, w);
    let y0 = target.y.clamp(0.0, h);
    let x1 = target.right().clamp(0.0, w);
    let y1 = target.bottom().clamp(0.0, h);
    let clamped = BBox::new(x0, y0, x1 - x0, y1 - y0);
    if clamped.is_degenerate() {
        bail!(
            "target box {:?} is degenerate after clamping to the {}x{} image",
            target,
            image.width(),
            image.height()
        );
    }
    Ok(clamped)
}
