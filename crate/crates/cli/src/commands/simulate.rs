//! `trackpost simulate`: generate synthetic scenes and write the
//! candidate stream plus ground truth.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use rayon::prelude::*;
use std::path::{Path, PathBuf};
use trackpost::simulator::{self, SceneConfig};
use trackpost::stream::{self, CandidateStream, StreamHeader};

pub struct Args {
    pub config: RunConfig,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub batch: usize,
}

pub fn run(args: Args) -> Result<()> {
    let mut scene = args.config.scene.clone();
    if let Some(seed) = args.seed {
        scene.seed = seed;
    }

    if args.batch <= 1 {
        write_scene(&scene, &args.out)?;
        return Ok(());
    }

    // one scene per worker, seeds counting up from the base seed
    let scenes: Vec<SceneConfig> = (0..args.batch as u64)
        .map(|offset| SceneConfig {
            seed: scene.seed + offset,
            ..scene.clone()
        })
        .collect();
    scenes
        .par_iter()
        .map(|scene| {
            let dir = args.out.join(sequence_name(scene));
            write_scene(scene, &dir)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(())
}

fn sequence_name(scene: &SceneConfig) -> String {
    format!("scene-{:04}", scene.seed)
}

fn write_scene(scene: &SceneConfig, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let sequence = simulator::generate(scene)?;

    let stream_path = dir.join("stream.jsonl");
    let candidate_stream = CandidateStream {
        header: StreamHeader {
            sequence: sequence_name(scene),
            init_box: *sequence.init_box(),
            width: scene.arena_width.ceil() as u32,
            height: scene.arena_height.ceil() as u32,
        },
        observations: sequence.stream.clone(),
    };
    stream::write_stream_to_path(&stream_path, &candidate_stream)?;

    let gt_path = dir.join("groundtruth.txt");
    stream::write_trajectory_to_path(&gt_path, &sequence.ground_truth)?;

    log::info!(
        "wrote {} ({} frames) and {}",
        stream_path.display(),
        sequence.ground_truth.len(),
        gt_path.display()
    );
    Ok(())
}
