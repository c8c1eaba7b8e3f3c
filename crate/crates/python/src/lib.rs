//! Python bindings: frames, filling, the exemplar database, matching,
//! diagnosis, refinement and the synthetic generator.

use formcheck_core::analysis::{analyze_frame, AnalysisConfig};
use formcheck_core::matching::{build_database, LabeledFrame};
use formcheck_core::projection::refine_frame as core_refine;
use formcheck_core::rules::{diagnose_label, RuleParams};
use formcheck_core::synth::{generate as core_generate, SynthKind};
use formcheck_core::{
    fill_missing as core_fill, Error as CoreError, MatchResult, PoseDatabase as CoreDatabase, PoseFrame as CoreFrame,
    PoseLabel,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(formcheck, FormcheckError, PyValueError);

fn err(e: CoreError) -> PyErr {
    FormcheckError::new_err(e.to_string())
}

fn label(text: &str) -> PyResult<PoseLabel> {
    text.parse().map_err(err)
}

fn to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| FormcheckError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// One frame of 17 COCO keypoints.
#[pyclass(name = "PoseFrame", module = "formcheck", frozen)]
pub struct PyPoseFrame {
    inner: CoreFrame,
}

#[pymethods]
impl PyPoseFrame {
    /// `keypoints` is a list of 17 `(x, y, confidence)`; confidence 0 marks a missing point.
    #[new]
    #[pyo3(signature = (keypoints, width, height, t=0))]
    fn new(keypoints: Vec<(f64, f64, f64)>, width: u32, height: u32, t: i64) -> PyResult<Self> {
        let v = serde_json::json!({ "t": t, "w": width, "h": height, "kp": keypoints });
        CoreFrame::from_json(&v.to_string()).map(|inner| PyPoseFrame { inner }).map_err(err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreFrame::from_json(text).map(|inner| PyPoseFrame { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn keypoints(&self) -> Vec<(f64, f64, f64)> {
        self.inner.keypoints().iter().map(|k| (k.x, k.y, k.confidence)).collect()
    }

    #[getter]
    fn width(&self) -> u32 {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> u32 {
        self.inner.height()
    }

    #[getter]
    fn t(&self) -> i64 {
        self.inner.timestamp_ms()
    }

    fn missing_parts(&self) -> Vec<&'static str> {
        self.inner.missing_parts().iter().map(|p| p.name()).collect()
    }

    fn __repr__(&self) -> String {
        format!("PoseFrame(t={}, w={}, h={}, missing={})", self.t(), self.width(), self.height(), self.inner.missing_parts().len())
    }
}

/// Labeled exemplars matched by the combined E-A distance.
#[pyclass(name = "PoseDatabase", module = "formcheck", frozen)]
pub struct PyPoseDatabase {
    inner: CoreDatabase,
}

fn match_dict<'py>(py: Python<'py>, m: &MatchResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("label", m.label.as_str())?;
    d.set_item("src", &m.best_source_id)?;
    d.set_item("distance", m.distance)?;
    d.set_item("d_euclid", m.d_euclid)?;
    d.set_item("d_angle", m.d_angle)?;
    d.set_item("index", m.index)?;
    Ok(d)
}

#[pymethods]
impl PyPoseDatabase {
    /// Builds from `(frame, label, source_id)` triples. Returns the database
    /// and the source ids that could not be featurized.
    #[staticmethod]
    #[pyo3(signature = (frames, ea_ratio=2.0))]
    fn build(frames: Vec<(PyRef<'_, PyPoseFrame>, String, String)>, ea_ratio: f64) -> PyResult<(Self, Vec<String>)> {
        let labeled = frames
            .into_iter()
            .map(|(f, l, src)| Ok(LabeledFrame { frame: f.inner.clone(), label: label(&l)?, source_id: src }))
            .collect::<PyResult<Vec<_>>>()?;
        let (inner, skipped) = build_database(labeled, ea_ratio).map_err(err)?;
        Ok((PyPoseDatabase { inner }, skipped.into_iter().map(|s| s.source_id).collect()))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        CoreDatabase::from_json(text).map(|inner| PyPoseDatabase { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn ea_ratio(&self) -> f64 {
        self.inner.ea_ratio()
    }

    fn label_counts(&self) -> Vec<(&'static str, usize)> {
        self.inner.label_counts().into_iter().map(|(l, n)| (l.as_str(), n)).collect()
    }

    /// Nearest exemplar; `ea_ratio` overrides the database's ratio.
    #[pyo3(signature = (frame, ea_ratio=None))]
    fn classify<'py>(&self, py: Python<'py>, frame: PyRef<'_, PyPoseFrame>, ea_ratio: Option<f64>) -> PyResult<Bound<'py, PyDict>> {
        let m = self.inner.classify_with_ratio(&frame.inner, ea_ratio.unwrap_or(self.inner.ea_ratio())).map_err(err)?;
        match_dict(py, &m)
    }

    /// Fill, match and diagnose one frame.
    #[pyo3(signature = (frame, ea_ratio=None, k=1, refine_squat=false, refine_plank=false, plank_angle_threshold=None, knee_tolerance=None, weight_fraction_threshold=None))]
    #[allow(clippy::too_many_arguments)]
    fn analyze<'py>(
        &self,
        py: Python<'py>,
        frame: PyRef<'_, PyPoseFrame>,
        ea_ratio: Option<f64>,
        k: usize,
        refine_squat: bool,
        refine_plank: bool,
        plank_angle_threshold: Option<f64>,
        knee_tolerance: Option<f64>,
        weight_fraction_threshold: Option<f64>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let config = AnalysisConfig {
            params: params(plank_angle_threshold, knee_tolerance, weight_fraction_threshold),
            ea_ratio,
            k,
            refine_squat,
            refine_plank,
            ..AnalysisConfig::default()
        };
        let a = analyze_frame(&frame.inner, &self.inner, &config).map_err(err)?;
        to_py(py, &a)
    }
}

fn params(plank: Option<f64>, knee: Option<f64>, weight: Option<f64>) -> RuleParams {
    let d = RuleParams::default();
    RuleParams {
        plank_angle_threshold: plank.unwrap_or(d.plank_angle_threshold),
        knee_tolerance: knee.unwrap_or(d.knee_tolerance),
        weight_fraction_threshold: weight.unwrap_or(d.weight_fraction_threshold),
    }
}

/// Completes missing keypoints. Returns the filled frame and a map from part
/// name to the strategy that filled it.
#[pyfunction]
fn fill_missing(frame: PyRef<'_, PyPoseFrame>) -> PyResult<(PyPoseFrame, Vec<(&'static str, String)>)> {
    let (filled, report) = core_fill(&frame.inner).map_err(err)?;
    let parts = report
        .filled_parts()
        .into_iter()
        .map(|p| {
            let strategy = report.strategy(p).and_then(|s| serde_json::to_value(s).ok());
            (p.name(), strategy.and_then(|v| v.as_str().map(String::from)).unwrap_or_default())
        })
        .collect();
    Ok((PyPoseFrame { inner: filled }, parts))
}

/// Runs the rules of `label` ("plank" or "squat") on a complete frame.
#[pyfunction]
#[pyo3(signature = (frame, label, refine=false, plank_angle_threshold=None, knee_tolerance=None, weight_fraction_threshold=None))]
fn diagnose<'py>(
    py: Python<'py>,
    frame: PyRef<'_, PyPoseFrame>,
    label: &str,
    refine: bool,
    plank_angle_threshold: Option<f64>,
    knee_tolerance: Option<f64>,
    weight_fraction_threshold: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let p = params(plank_angle_threshold, knee_tolerance, weight_fraction_threshold);
    let d = diagnose_label(&frame.inner, self::label(label)?, &p, refine).map_err(err)?;
    to_py(py, &d)
}

/// Maps the frame through the back-quad projection fit.
#[pyfunction]
fn refine_frame(frame: PyRef<'_, PyPoseFrame>) -> PyResult<PyPoseFrame> {
    core_refine(&frame.inner).map(|inner| PyPoseFrame { inner }).map_err(err)
}

/// Seeded synthetic frames as `(frame, label, error_codes)` triples.
#[pyfunction]
#[pyo3(signature = (kind, n, noise=0.0, seed=0))]
fn generate(kind: &str, n: usize, noise: f64, seed: u64) -> PyResult<Vec<(PyPoseFrame, &'static str, Vec<&'static str>)>> {
    let kind: SynthKind = kind.parse().map_err(err)?;
    let frames = core_generate(kind, n, noise, seed).map_err(err)?;
    Ok(frames
        .into_iter()
        .map(|s| (PyPoseFrame { inner: s.frame }, s.label.as_str(), s.truth.iter().map(|c| c.as_str()).collect()))
        .collect())
}

#[pymodule]
fn formcheck(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("FormcheckError", m.py().get_type::<FormcheckError>())?;
    m.add_class::<PyPoseFrame>()?;
    m.add_class::<PyPoseDatabase>()?;
    m.add_function(wrap_pyfunction!(fill_missing, m)?)?;
    m.add_function(wrap_pyfunction!(diagnose, m)?)?;
    m.add_function(wrap_pyfunction!(refine_frame, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
