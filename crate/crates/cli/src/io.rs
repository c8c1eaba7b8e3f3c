use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use formcheck_core::matching::PoseDatabase;
use formcheck_core::{PoseFrame, PoseLabel};
use serde::Serialize;

use crate::input_error;

pub const LABELS_FILE: &str = "labels.json";
pub const TRUTH_FILE: &str = "truth.json";

/// A frame read from disk, or the reason it could not be parsed.
#[derive(Debug)]
pub struct InputFrame {
    pub id: String,
    pub frame: std::result::Result<PoseFrame, String>,
}

/// `{"<file name>": "plank" | "squat", ...}`
pub fn read_labels(path: &Path) -> Result<BTreeMap<String, PoseLabel>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading labels {}", path.display()))?;
    let raw: BTreeMap<String, String> =
        serde_json::from_str(&text).with_context(|| format!("parsing labels {}", path.display()))?;
    raw.into_iter()
        .map(|(k, v)| {
            let label = v.parse().with_context(|| format!("label of {k}"))?;
            Ok((k, label))
        })
        .collect()
}

/// Frame files of a directory in name order; sidecar files are excluded.
pub fn frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(input_error(format!("{} is not a directory", dir.display())));
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if path.is_file() && name.ends_with(".json") && name != LABELS_FILE && name != TRUTH_FILE {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

pub fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Frames from a directory of frame files, or from a JSON-lines file with
/// one frame per line (ids `line-1`, `line-2`, ...).
pub fn load_frames(path: &Path) -> Result<Vec<InputFrame>> {
    if path.is_dir() {
        return frame_files(path)?
            .into_iter()
            .map(|p| {
                let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                Ok(InputFrame { id: file_name(&p), frame: PoseFrame::from_json(&text).map_err(|e| e.to_string()) })
            })
            .collect();
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| InputFrame { id: format!("line-{}", i + 1), frame: PoseFrame::from_json(l).map_err(|e| e.to_string()) })
        .collect())
}

pub fn read_database(path: &Path) -> Result<PoseDatabase> {
    let text = fs::read_to_string(path).with_context(|| format!("reading database {}", path.display()))?;
    PoseDatabase::from_json(&text).with_context(|| format!("parsing database {}", path.display()))
}

pub fn write_pretty(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
