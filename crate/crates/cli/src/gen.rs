use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use formcheck_core::rules::ErrorCode;
use formcheck_core::synth::{SynthGenerator, SynthKind};
use formcheck_core::PoseLabel;
use serde::{Deserialize, Serialize};

use crate::input_error;
use crate::io::{write_pretty, LABELS_FILE, TRUTH_FILE};

/// Ground truth stored next to generated frames in `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub kind: SynthKind,
    pub label: PoseLabel,
    pub errors: Vec<ErrorCode>,
}

fn read_map<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<BTreeMap<String, T>> {
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Writes `n` frames named `<kind>-<seed>-<index>.json` and merges their
/// labels and ground truth into the directory's sidecar files, so several
/// runs can fill one corpus.
pub fn gen_synthetic(kind: SynthKind, n: usize, noise: f64, seed: u64, out: &Path) -> Result<Vec<String>> {
    if n == 0 {
        return Err(input_error("--n must be positive"));
    }
    let mut gen = SynthGenerator::new(seed, noise)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut labels: BTreeMap<String, PoseLabel> = read_map(&out.join(LABELS_FILE))?;
    let mut truth: BTreeMap<String, TruthRecord> = read_map(&out.join(TRUTH_FILE))?;
    let mut names = Vec::with_capacity(n);
    for i in 0..n {
        let s = gen.generate(kind);
        let name = format!("{kind}-{seed}-{i:05}.json");
        let frame = s.frame.with_timestamp(i as i64 * 33);
        fs::write(out.join(&name), frame.to_json() + "\n").with_context(|| format!("writing {name}"))?;
        labels.insert(name.clone(), s.label);
        truth.insert(name.clone(), TruthRecord { kind, label: s.label, errors: s.truth });
        names.push(name);
    }
    write_pretty(&out.join(LABELS_FILE), &labels)?;
    write_pretty(&out.join(TRUTH_FILE), &truth)?;
    Ok(names)
}

pub fn read_truth(dir: &Path) -> Result<BTreeMap<String, TruthRecord>> {
    read_map(&dir.join(TRUTH_FILE))
}
