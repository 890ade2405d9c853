//! Python bindings: `import pytabscan`.

use std::path::{Path, PathBuf};

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use tabscan::evaluation::metrics::area_precision_recall;
use tabscan::ocr_output::{to_csv_string, TableCell};
use tabscan::pipeline::{self, make_classifier, ocr_for, EvalMode, SynthOverrides};
use tabscan::region_detect;
use tabscan::{Error, GrayImage, PipelineConfig};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Inclusive pixel rectangle.
#[pyclass(name = "Region", frozen, eq, from_py_object)]
#[derive(Clone, PartialEq)]
struct PyRegion(region_detect::Region);

#[pymethods]
impl PyRegion {
    #[new]
    fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> PyResult<Self> {
        if x_min > x_max || y_min > y_max {
            return Err(PyValueError::new_err("region corners are inverted"));
        }
        Ok(Self(region_detect::Region::new(x_min, y_min, x_max, y_max)))
    }

    #[getter]
    fn x_min(&self) -> u32 {
        self.0.x_min
    }
    #[getter]
    fn y_min(&self) -> u32 {
        self.0.y_min
    }
    #[getter]
    fn x_max(&self) -> u32 {
        self.0.x_max
    }
    #[getter]
    fn y_max(&self) -> u32 {
        self.0.y_max
    }

    fn overlaps(&self, other: &PyRegion) -> bool {
        self.0.overlaps(&other.0)
    }

    fn union(&self, other: &PyRegion) -> PyRegion {
        PyRegion(self.0.union(&other.0))
    }

    fn __repr__(&self) -> String {
        let r = &self.0;
        format!("Region({}, {}, {}, {})", r.x_min, r.y_min, r.x_max, r.y_max)
    }
}

/// Pipeline settings. Keyword arguments override the defaults by key name.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
struct PyConfig(PipelineConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (**kwargs))]
    fn new(kwargs: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut cfg = PipelineConfig::default();
        if let Some(kw) = kwargs {
            let mut pairs = Vec::new();
            for (k, v) in kw.iter() {
                let key: String = k.extract()?;
                let text = if let Ok(b) = v.extract::<bool>() {
                    b.to_string()
                } else if v.is_none() {
                    String::new()
                } else {
                    v.str()?.to_string()
                };
                pairs.push((key, text));
            }
            cfg.apply_pairs(pairs).map_err(to_py)?;
        }
        Ok(Self(cfg))
    }

    /// Parses the `key = value` file format.
    #[staticmethod]
    fn from_string(text: &str) -> PyResult<Self> {
        PipelineConfig::from_config_str(text).map(Self).map_err(to_py)
    }

    fn to_config_string(&self) -> String {
        self.0.to_config_string()
    }

    fn __repr__(&self) -> String {
        format!(
            "Config(threshold_start={}, delta={}, ocr_cmd={:?})",
            self.0.threshold_start, self.0.delta, self.0.ocr_cmd
        )
    }
}

/// One extracted table.
#[pyclass(name = "Table", frozen)]
struct PyTable {
    #[pyo3(get)]
    region: PyRegion,
    #[pyo3(get)]
    rows: usize,
    #[pyo3(get)]
    cols: usize,
    /// Cell strings row by row; merged cells hold the `EXTEND` tokens.
    #[pyo3(get)]
    cells: Vec<Vec<String>>,
    #[pyo3(get)]
    csv: String,
    #[pyo3(get)]
    warnings: Vec<String>,
}

#[pymethods]
impl PyTable {
    fn __repr__(&self) -> String {
        format!("Table({}x{} at {})", self.rows, self.cols, self.region.__repr__())
    }
}

/// Runs the full pipeline on one image file.
#[pyfunction]
#[pyo3(signature = (path, config=None, regions=None))]
fn extract(path: PathBuf, config: Option<PyConfig>, regions: Option<Vec<PyRegion>>) -> PyResult<Vec<PyTable>> {
    let cfg = config.map(|c| c.0).unwrap_or_default();
    cfg.validate().map_err(to_py)?;
    let page = GrayImage::load(&path).map_err(to_py)?;
    let classifier = make_classifier(&cfg).map_err(to_py)?;
    let ocr = ocr_for(&cfg, &path).map_err(to_py)?;
    let proposals: Vec<_> = regions.unwrap_or_default().into_iter().map(|r| r.0).collect();
    let result = pipeline::extract_page(&page, &proposals, &cfg, classifier.as_ref(), ocr.as_ref()).map_err(to_py)?;
    result
        .tables
        .into_iter()
        .map(|t| {
            let m = &t.model;
            let cells = (0..m.rows)
                .map(|r| {
                    (0..m.cols)
                        .map(|c| match m.get(r, c) {
                            TableCell::Text(s) => s.clone(),
                            TableCell::Empty => String::new(),
                            TableCell::Extend(d) => cfg.arrows.token(*d).to_owned(),
                        })
                        .collect()
                })
                .collect();
            Ok(PyTable {
                region: PyRegion(t.structure.region),
                rows: m.rows,
                cols: m.cols,
                cells,
                csv: to_csv_string(m, cfg.arrows).map_err(to_py)?,
                warnings: t.warnings,
            })
        })
        .collect()
}

/// Fixed-point bounding-box union of two region lists.
#[pyfunction]
fn ensemble_union(primary: Vec<PyRegion>, proposals: Vec<PyRegion>) -> Vec<PyRegion> {
    let a: Vec<_> = primary.into_iter().map(|r| r.0).collect();
    let b: Vec<_> = proposals.into_iter().map(|r| r.0).collect();
    region_detect::ensemble_union(&a, &b)
        .into_iter()
        .map(PyRegion)
        .collect()
}

/// Area precision, recall and F1 of predicted against true regions.
#[pyfunction]
fn area_scores(predicted: Vec<PyRegion>, truth: Vec<PyRegion>) -> (f64, f64, f64) {
    let p: Vec<_> = predicted.into_iter().map(|r| r.0).collect();
    let t: Vec<_> = truth.into_iter().map(|r| r.0).collect();
    let s = area_precision_recall(&p, &t);
    (s.precision, s.recall, s.f1)
}

/// Writes a seeded synthetic corpus; returns the image paths.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=0, count=10, ruled=None, span=None, sparse_column=None))]
fn synth(
    out_dir: PathBuf,
    seed: u64,
    count: usize,
    ruled: Option<bool>,
    span: Option<bool>,
    sparse_column: Option<bool>,
) -> PyResult<Vec<PathBuf>> {
    let overrides = SynthOverrides {
        ruled,
        span,
        sparse_column,
        ..SynthOverrides::default()
    };
    pipeline::run_synth(seed, count, &overrides, &out_dir).map_err(to_py)
}

type FileResult = (PathBuf, Option<usize>, Option<String>);

/// Extracts every image in `inputs`, writing CSV and sidecar files to the
/// config's output directory. Returns `(path, table count, error)` triples;
/// exactly one of the last two is `None`.
#[pyfunction]
#[pyo3(signature = (inputs, config=None))]
fn extract_files(inputs: Vec<PathBuf>, config: Option<PyConfig>) -> PyResult<Vec<FileResult>> {
    let cfg = config.map(|c| c.0).unwrap_or_default();
    let inputs = pipeline::collect_inputs(&inputs).map_err(to_py)?;
    let summary = pipeline::run_extract(&inputs, &[], &cfg).map_err(to_py)?;
    Ok(summary
        .outcomes
        .into_iter()
        .map(|o| match o.result {
            Ok(n) => (o.input, Some(n), None),
            Err(e) => (o.input, None, Some(e.to_string())),
        })
        .collect())
}

/// Scores a prediction directory against ground truth; returns the report
/// as a dict.
#[pyfunction]
#[pyo3(signature = (pred_dir, truth_dir, mode="icdar", strict_text=false, micro=false))]
fn evaluate<'py>(
    py: Python<'py>,
    pred_dir: PathBuf,
    truth_dir: PathBuf,
    mode: &str,
    strict_text: bool,
    micro: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let mode = match mode {
        "icdar" => EvalMode::Icdar,
        "area" => EvalMode::Area,
        other => return Err(PyValueError::new_err(format!("unknown mode {other:?}"))),
    };
    let report =
        pipeline::run_eval(Path::new(&pred_dir), Path::new(&truth_dir), mode, strict_text, micro).map_err(to_py)?;
    let json = serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (json,))
}

#[pymodule]
pub fn pytabscan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRegion>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyTable>()?;
    m.add_function(wrap_pyfunction!(extract, m)?)?;
    m.add_function(wrap_pyfunction!(extract_files, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_union, m)?)?;
    m.add_function(wrap_pyfunction!(area_scores, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
