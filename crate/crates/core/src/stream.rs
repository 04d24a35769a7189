//! Line-delimited file formats: candidate streams and trajectory files.
//!
//! A candidate-stream file starts with a JSON header line
//! `{"sequence", "init_box", "width", "height"}` followed by one JSON
//! record per frame. Records are either full observations
//! `{"frame", "max", "candidates"}` or raw response frames
//! `{"frame", "grid_size", "entries"}`; the latter are reduced to
//! candidate sets on read using the configured top-n and NMS threshold.
//!
//! Trajectory and ground-truth files are plain text, one `x,y,w,h` line
//! per frame (the OTB ground-truth layout).

use crate::candidates::{self, ResponseEntry, ResponseFrame};
use crate::error::{Error, Result};
use crate::geometry::BBox;
use crate::mbpp::FrameObservation;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

/// First line of a candidate-stream file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StreamHeader {
    pub sequence: String,
    pub init_box: BBox,
    pub width: u32,
    pub height: u32,
}

/// A parsed candidate stream.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateStream {
    pub header: StreamHeader,
    pub observations: Vec<FrameObservation>,
}

/// How raw response-frame records are reduced to candidate sets.
#[derive(Debug, Clone, Copy)]
pub struct StreamReadOptions {
    pub candidates: usize,
    pub nms_threshold: f64,
}

impl Default for StreamReadOptions {
    fn default() -> Self {
        Self {
            candidates: candidates::DEFAULT_CANDIDATES,
            nms_threshold: candidates::DEFAULT_NMS_THRESHOLD,
        }
    }
}

#[derive(Deserialize)]
struct ResponseRecord {
    frame: u64,
    grid_size: usize,
    entries: Vec<ResponseEntry>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum StreamLine {
    Observation(FrameObservation),
    Response(ResponseRecord),
}

/// Read a candidate stream, reducing any response-frame records with the
/// given options.
pub fn read_stream<R: BufRead>(reader: R, options: &StreamReadOptions) -> Result<CandidateStream> {
    let mut lines = reader.lines().enumerate();

    let header: StreamHeader = loop {
        match lines.next() {
            Some((idx, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line)
                    .map_err(|e| Error::format(idx + 1, format!("invalid header: {e}")))?;
            }
            None => return Err(Error::format(1, "missing stream header")),
        }
    };

    let mut observations = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: StreamLine = serde_json::from_str(&line)
            .map_err(|e| Error::format(idx + 1, format!("invalid record: {e}")))?;
        let obs = match record {
            StreamLine::Observation(obs) => obs,
            StreamLine::Response(raw) => {
                let frame = ResponseFrame::new(raw.grid_size, raw.entries)
                    .map_err(|e| Error::format(idx + 1, e.to_string()))?;
                let set = candidates::extract(&frame, options.candidates, options.nms_threshold)
                    .map_err(|e| Error::format(idx + 1, e.to_string()))?;
                let max = set.items()[0];
                FrameObservation::new(raw.frame, max, set)
                    .map_err(|e| Error::format(idx + 1, e.to_string()))?
            }
        };
        observations.push(obs);
    }

    Ok(CandidateStream {
        header,
        observations,
    })
}

pub fn read_stream_from_path(
    path: impl AsRef<Path>,
    options: &StreamReadOptions,
) -> Result<CandidateStream> {
    read_stream(BufReader::new(File::open(path)?), options)
}

/// Write a candidate stream in the observation form.
pub fn write_stream<W: Write>(mut writer: W, stream: &CandidateStream) -> Result<()> {
    let header = serde_json::to_string(&stream.header).expect("header serializes");
    writeln!(writer, "{header}")?;
    for obs in &stream.observations {
        let line = serde_json::to_string(obs).expect("observation serializes");
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

pub fn write_stream_to_path(path: impl AsRef<Path>, stream: &CandidateStream) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_stream(&mut writer, stream)?;
    writer.flush()?;
    Ok(())
}

/// Write boxes as `x,y,w,h` lines.
pub fn write_trajectory<W: Write>(mut writer: W, trajectory: &[BBox]) -> Result<()> {
    for b in trajectory {
        writeln!(writer, "{},{},{},{}", b.x, b.y, b.w, b.h)?;
    }
    Ok(())
}

pub fn write_trajectory_to_path(path: impl AsRef<Path>, trajectory: &[BBox]) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_trajectory(&mut writer, trajectory)?;
    writer.flush()?;
    Ok(())
}

/// Read `x,y,w,h` lines. Empty lines are skipped; sizes must be
/// non-negative finite numbers.
pub fn read_trajectory<R: BufRead>(reader: R) -> Result<Vec<BBox>> {
    let mut boxes = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::format(
                idx + 1,
                format!("expected 4 comma-separated values, got {}", fields.len()),
            ));
        }
        let mut values = [0.0f64; 4];
        for (slot, field) in values.iter_mut().zip(&fields) {
            *slot = field
                .parse()
                .map_err(|e| Error::format(idx + 1, format!("bad number '{field}': {e}")))?;
        }
        let bbox = BBox::try_from(values).map_err(|e| Error::format(idx + 1, e))?;
        boxes.push(bbox);
    }
    Ok(boxes)
}

pub fn read_trajectory_from_path(path: impl AsRef<Path>) -> Result<Vec<BBox>> {
    read_trajectory(BufReader::new(File::open(path)?))
}
