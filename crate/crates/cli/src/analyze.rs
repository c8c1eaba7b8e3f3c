use std::collections::BTreeMap;
use std::io::Write;

use anyhow::Result;
use formcheck_core::analysis::{analyze_frame, AnalysisConfig};
use formcheck_core::matching::PoseDatabase;
use formcheck_core::rules::Diagnosis;
use formcheck_core::{Error as CoreError, PoseLabel};
use serde::{Deserialize, Serialize};

use crate::io::InputFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchLine {
    pub label: PoseLabel,
    pub src: String,
    pub distance: f64,
    pub d_euclid: f64,
    pub d_angle: f64,
    pub ea_ratio: f64,
}

/// One line of `analyze` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReportLine {
    Diagnosed {
        frame: String,
        t: i64,
        #[serde(flatten)]
        diagnosis: Diagnosis,
        #[serde(rename = "match")]
        matched: MatchLine,
        refined: bool,
        filled: Vec<String>,
    },
    Failed {
        frame: String,
        #[serde(skip_serializing_if = "Option::is_none")]
        t: Option<i64>,
        error: String,
        detail: String,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub frames: usize,
    pub diagnosed: usize,
    pub correct: usize,
    pub unfillable: usize,
    /// Frames rejected for any other reason.
    pub failed: usize,
    pub labels: BTreeMap<String, usize>,
    pub errors: BTreeMap<String, usize>,
}

impl Summary {
    pub fn record(&mut self, line: &ReportLine) {
        self.frames += 1;
        match line {
            ReportLine::Diagnosed { diagnosis, .. } => {
                self.diagnosed += 1;
                self.correct += usize::from(diagnosis.correct);
                *self.labels.entry(diagnosis.label.to_string()).or_default() += 1;
                for code in &diagnosis.errors {
                    *self.errors.entry(code.as_str().to_string()).or_default() += 1;
                }
            }
            ReportLine::Failed { error, .. } if error == "unfillable" => self.unfillable += 1,
            ReportLine::Failed { .. } => self.failed += 1,
        }
    }
}

#[derive(Serialize)]
struct SummaryLine<'a> {
    summary: &'a Summary,
}

fn error_name(e: &CoreError) -> &'static str {
    match e {
        CoreError::UnfillableFrame { .. } => "unfillable",
        CoreError::InvalidFrame(_) | CoreError::Json(_) => "bad_frame",
        _ => "degenerate",
    }
}

pub fn analyze_one(input: &InputFrame, db: &PoseDatabase, config: &AnalysisConfig) -> ReportLine {
    let frame = match &input.frame {
        Ok(f) => f,
        Err(detail) => {
            return ReportLine::Failed { frame: input.id.clone(), t: None, error: "bad_frame".into(), detail: detail.clone() }
        }
    };
    let t = frame.timestamp_ms();
    match analyze_frame(frame, db, config) {
        Ok(a) => ReportLine::Diagnosed {
            frame: input.id.clone(),
            t,
            diagnosis: a.diagnosis,
            matched: MatchLine {
                label: a.matched.label,
                src: a.matched.best_source_id,
                distance: a.matched.distance,
                d_euclid: a.matched.d_euclid,
                d_angle: a.matched.d_angle,
                ea_ratio: config.ea_ratio.unwrap_or(db.ea_ratio()),
            },
            refined: a.refined,
            filled: a.fill.filled_parts().iter().map(|p| p.name().to_string()).collect(),
        },
        Err(e) => ReportLine::Failed { frame: input.id.clone(), t: Some(t), error: error_name(&e).into(), detail: e.to_string() },
    }
}

/// Writes one JSON line per frame and a trailing `{"summary": ...}` line.
pub fn analyze(frames: &[InputFrame], db: &PoseDatabase, config: &AnalysisConfig, out: &mut impl Write) -> Result<Summary> {
    config.params.validate()?;
    let mut summary = Summary::default();
    for input in frames {
        let line = analyze_one(input, db, config);
        summary.record(&line);
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(&mut *out, &SummaryLine { summary: &summary })?;
    out.write_all(b"\n")?;
    Ok(summary)
}
