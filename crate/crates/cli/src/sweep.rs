use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use formcheck_core::features::FrameFeatures;
use formcheck_core::fill::fill_missing;
use formcheck_core::matching::PoseDatabase;
use formcheck_core::PoseLabel;
use serde::Serialize;

use crate::input_error;
use crate::io::{load_frames, InputFrame};

/// Frames of a labeled corpus; frames that cannot be featurized are counted
/// as misclassified at every ratio.
#[derive(Debug)]
pub struct Corpus {
    frames: Vec<(PoseLabel, Option<FrameFeatures>)>,
}

impl Corpus {
    pub fn from_inputs(inputs: Vec<InputFrame>, labels: &BTreeMap<String, PoseLabel>) -> Result<Corpus> {
        let mut frames = Vec::new();
        for input in inputs {
            let Some(&label) = labels.get(&input.id) else { continue };
            let features = input.frame.ok().and_then(|f| fill_missing(&f).ok()).and_then(|(f, _)| FrameFeatures::from_filled(&f).ok());
            frames.push((label, features));
        }
        if frames.is_empty() {
            return Err(input_error("corpus has no labeled frames"));
        }
        Ok(Corpus { frames })
    }

    pub fn load(dir: &Path, labels: &BTreeMap<String, PoseLabel>) -> Result<Corpus> {
        Corpus::from_inputs(load_frames(dir).with_context(|| format!("loading corpus {}", dir.display()))?, labels)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub ea_ratio: f64,
    pub frames: usize,
    pub misclassified: usize,
}

impl SweepRow {
    pub fn error_rate(&self) -> f64 {
        self.misclassified as f64 / self.frames as f64
    }

    /// Cells shared by the printed table and the CSV.
    fn cells(&self) -> [String; 4] {
        [
            self.ea_ratio.to_string(),
            self.frames.to_string(),
            self.misclassified.to_string(),
            format!("{:.1}%", 100.0 * self.error_rate()),
        ]
    }
}

const HEADER: [&str; 4] = ["ea_ratio", "frames", "misclassified", "error_rate"];

pub fn sweep(db: &PoseDatabase, corpus: &Corpus, ratios: &[f64]) -> Result<Vec<SweepRow>> {
    if ratios.is_empty() {
        return Err(input_error("no ratios given"));
    }
    ratios
        .iter()
        .map(|&ratio| {
            let mut misclassified = 0;
            for (label, features) in &corpus.frames {
                let ok = match features {
                    Some(f) => db.classify_features(f, ratio)?.label == *label,
                    None => false,
                };
                misclassified += usize::from(!ok);
            }
            Ok(SweepRow { ea_ratio: ratio, frames: corpus.len(), misclassified })
        })
        .collect()
}

pub fn format_table(rows: &[SweepRow]) -> String {
    let cells: Vec<[String; 4]> = rows.iter().map(SweepRow::cells).collect();
    let widths: Vec<usize> =
        (0..4).map(|i| cells.iter().map(|c| c[i].len()).chain([HEADER[i].len()]).max().unwrap_or(0)).collect();
    let mut out = String::new();
    let mut line = |cols: &[&str]| {
        let padded: Vec<String> = cols.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&HEADER);
    for c in &cells {
        line(&c.each_ref().map(String::as_str));
    }
    out
}

pub fn write_csv(rows: &[SweepRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.cells())?;
    }
    w.flush()?;
    Ok(())
}

pub fn parse_ratios(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            let r: f64 = s.trim().parse().map_err(|_| input_error(format!("bad ratio {s:?}")))?;
            if r > 0.0 && r.is_finite() {
                Ok(r)
            } else {
                Err(input_error(format!("ratio must be positive, got {r}")))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_ratio_list() {
        assert_eq!(parse_ratios("2, 1,0.5").unwrap(), vec![2.0, 1.0, 0.5]);
        assert!(parse_ratios("2,x").is_err());
        assert!(parse_ratios("0").is_err());
    }

    #[test]
    fn table_and_csv_share_cells() {
        let rows = vec![
            SweepRow { ea_ratio: 2.0, frames: 1000, misclassified: 12 },
            SweepRow { ea_ratio: 0.5, frames: 1000, misclassified: 50 },
        ];
        let table = format_table(&rows);
        let mut csv = Vec::new();
        write_csv(&rows, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        let table_cells: Vec<Vec<&str>> = table.lines().map(|l| l.split_whitespace().collect()).collect();
        let csv_cells: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
        assert_eq!(table_cells, csv_cells);
        assert_eq!(table_cells[1], ["2", "1000", "12", "1.2%"]);
    }
}
