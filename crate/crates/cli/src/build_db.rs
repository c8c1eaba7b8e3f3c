use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use formcheck_core::matching::{build_database, LabeledFrame, PoseDatabase};
use formcheck_core::{PoseFrame, PoseLabel};

use crate::input_error;
use crate::io::{file_name, frame_files, read_labels};

#[derive(Debug)]
pub struct BuildReport {
    pub db: PoseDatabase,
    pub warnings: Vec<String>,
}

impl BuildReport {
    /// `plank: 90, squat: 110`
    pub fn counts_line(&self) -> String {
        format_counts(&self.db.label_counts())
    }
}

pub fn format_counts(counts: &BTreeMap<PoseLabel, usize>) -> String {
    PoseLabel::ALL
        .iter()
        .map(|l| format!("{l}: {}", counts.get(l).copied().unwrap_or(0)))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Source ids are the frame file names.
pub fn build_db(input_dir: &Path, labels_file: &Path, ea_ratio: f64) -> Result<BuildReport> {
    let labels = read_labels(labels_file)?;
    let mut warnings = Vec::new();
    let mut frames = Vec::new();
    for path in frame_files(input_dir)? {
        let name = file_name(&path);
        let Some(&label) = labels.get(&name) else {
            warnings.push(format!("{name}: no label, skipped"));
            continue;
        };
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        match PoseFrame::from_json(&text) {
            Ok(frame) => frames.push(LabeledFrame { frame, label, source_id: name }),
            Err(e) => warnings.push(format!("{name}: {e}, skipped")),
        }
    }
    if frames.is_empty() {
        return Err(input_error(format!("no labeled frames in {}", input_dir.display())));
    }
    let (db, skipped) = build_database(frames, ea_ratio)?;
    warnings.extend(skipped.into_iter().map(|s| format!("{}: {}, skipped", s.source_id, s.error)));
    Ok(BuildReport { db, warnings })
}
