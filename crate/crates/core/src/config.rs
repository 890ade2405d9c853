//! Pipeline configuration and its flat `key = value` file format.
//!
//! Lines are `key = value`; blank lines and lines starting with `#` are
//! ignored. Strings are written bare. Precedence when loading is
//! command-line flags over file values over built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::line_detect::LineConfig;
use crate::ocr_output::ArrowStyle;
use crate::region_detect::InkScorer;
use crate::structure_lines::StructureConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Page width used for region detection.
    pub working_width: u32,
    /// Rows added above and below the page before strip slicing.
    pub pad: u32,
    /// Negative bands tolerated inside one row group.
    pub merge_gap: usize,
    pub ink_threshold: u8,
    pub band_density: f64,
    pub band_context: u32,
    pub column_context: u32,
    pub line_fraction: f64,
    /// Margin added around each detected region before cropping.
    pub region_margin: u32,
    /// Table crops wider than this are shrunk before line detection.
    pub table_width: u32,
    pub seg_frac: f64,
    pub min_seg_px: u32,
    pub min_piece_px: u32,
    pub seg_gap: u32,
    pub high_quantile: f64,
    pub min_strength: u16,
    pub sim_cv: f64,
    pub sim_floor: f64,
    pub line_merge_gap: u32,
    /// Pixels around a real line left out of the data mask.
    pub line_excl: u32,
    /// Share of a line's segment that must be inked.
    pub line_cover: f64,
    /// Shortest unbroken ink run that counts as a drawn rule when masking.
    pub line_run: u32,
    pub threshold_start: f64,
    pub delta: f64,
    pub join_gap: usize,
    pub proximity: usize,
    pub min_cell: u32,
    pub merge_threshold: f64,
    pub empty_eps: f64,
    /// `ink` or `cmd:<command line>`.
    pub classifier: String,
    /// OCR command template; `stub:` reads word boxes next to each image.
    /// Unset means the environment variable, then the built-in default.
    pub ocr_cmd: Option<String>,
    pub parallelism: usize,
    pub debug_images: bool,
    pub out_dir: PathBuf,
    pub merge_multiline: bool,
    pub arrows: ArrowStyle,
    pub timings: bool,
    pub strict_text: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let ink = InkScorer::default();
        let lines = LineConfig::default();
        let st = StructureConfig::default();
        Self {
            working_width: 800,
            pad: 16,
            merge_gap: 1,
            ink_threshold: ink.ink_threshold,
            band_density: ink.density_threshold,
            band_context: ink.band_context,
            column_context: ink.column_context,
            line_fraction: ink.line_fraction,
            region_margin: 8,
            table_width: 800,
            seg_frac: lines.seg_frac,
            min_seg_px: lines.min_seg_px,
            min_piece_px: lines.min_piece_px,
            seg_gap: lines.seg_gap,
            high_quantile: lines.high_quantile,
            min_strength: lines.min_strength,
            sim_cv: lines.sim_cv,
            sim_floor: lines.sim_floor,
            line_merge_gap: lines.merge_gap,
            line_excl: 2,
            line_cover: 0.9,
            line_run: 15,
            threshold_start: st.threshold_start,
            delta: st.delta,
            join_gap: st.join_gap,
            proximity: st.proximity,
            min_cell: st.min_cell,
            merge_threshold: 0.5,
            empty_eps: 0.002,
            classifier: "ink".into(),
            ocr_cmd: None,
            parallelism: 1,
            debug_images: false,
            out_dir: PathBuf::from("out"),
            merge_multiline: false,
            arrows: ArrowStyle::Ascii,
            timings: false,
            strict_text: false,
        }
    }
}

impl PipelineConfig {
    pub fn ink_scorer(&self) -> InkScorer {
        InkScorer {
            ink_threshold: self.ink_threshold,
            density_threshold: self.band_density,
            band_context: self.band_context,
            column_context: self.column_context,
            line_fraction: self.line_fraction,
        }
    }

    pub fn line_config(&self) -> LineConfig {
        LineConfig {
            seg_frac: self.seg_frac,
            min_seg_px: self.min_seg_px,
            min_piece_px: self.min_piece_px,
            seg_gap: self.seg_gap,
            high_quantile: self.high_quantile,
            min_strength: self.min_strength,
            sim_cv: self.sim_cv,
            sim_floor: self.sim_floor,
            merge_gap: self.line_merge_gap,
        }
    }

    pub fn structure_config(&self) -> StructureConfig {
        StructureConfig {
            threshold_start: self.threshold_start,
            delta: self.delta,
            join_gap: self.join_gap,
            proximity: self.proximity,
            min_cell: self.min_cell,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let unit = |name: &str, v: f64, open: bool| -> Result<()> {
            let ok = if open {
                v > 0.0 && v < 1.0
            } else {
                (0.0..=1.0).contains(&v)
            };
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} = {v} is outside the unit interval")))
            }
        };
        if self.working_width < 64 {
            return bad(format!("working_width = {} is below 64", self.working_width));
        }
        if self.table_width < 64 {
            return bad(format!("table_width = {} is below 64", self.table_width));
        }
        unit("threshold_start", self.threshold_start, true)?;
        if !(self.delta > 0.0 && self.delta <= 0.1) {
            return bad(format!("delta = {} must be in (0, 0.1]", self.delta));
        }
        unit("band_density", self.band_density, false)?;
        unit("line_fraction", self.line_fraction, false)?;
        unit("seg_frac", self.seg_frac, false)?;
        unit("high_quantile", self.high_quantile, false)?;
        unit("line_cover", self.line_cover, false)?;
        unit("merge_threshold", self.merge_threshold, false)?;
        unit("empty_eps", self.empty_eps, false)?;
        if self.sim_cv <= 0.0 || self.sim_floor < 0.0 {
            return bad("sim_cv must be positive and sim_floor non-negative".into());
        }
        if self.min_cell < 1 {
            return bad("min_cell must be at least 1".into());
        }
        if self.parallelism < 1 {
            return bad("parallelism must be at least 1".into());
        }
        if self.classifier != "ink" && !self.classifier.starts_with("cmd:") {
            return bad(format!(
                "classifier = {:?}; expected `ink` or `cmd:<command>`",
                self.classifier
            ));
        }
        Ok(())
    }

    /// Serialises to the `key = value` format; parsing the result gives back
    /// an equal config.
    pub fn to_config_string(&self) -> String {
        let value = serde_json::to_value(self).expect("config serialises");
        let mut out = String::new();
        for (k, v) in value.as_object().expect("config is an object") {
            let text = match v {
                Value::Null => String::new(),
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k} = {text}\n"));
        }
        out
    }

    /// Parses `key = value` text on top of the defaults.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_pairs(parse_pairs(text)?)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_config_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Overrides fields from `(key, value)` pairs, coercing each value to the
    /// field's type.
    pub fn apply_pairs(&mut self, pairs: Vec<(String, String)>) -> Result<()> {
        let current = serde_json::to_value(&*self)?;
        let mut map: Map<String, Value> = current.as_object().cloned().expect("config is an object");
        for (k, raw) in pairs {
            let Some(slot) = map.get(&k) else {
                return Err(Error::Config(format!("unknown key {k:?}")));
            };
            let v = coerce(&k, slot, &raw)?;
            map.insert(k, v);
        }
        *self = serde_json::from_value(Value::Object(map)).map_err(|e| Error::Config(e.to_string()))?;
        self.validate()
    }
}

fn coerce(key: &str, like: &Value, raw: &str) -> Result<Value> {
    let err = || Error::Config(format!("{key}: cannot parse {raw:?}"));
    Ok(match like {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| err())?),
        Value::Number(_) => {
            let n: serde_json::Number = serde_json::from_str(raw).map_err(|_| err())?;
            Value::Number(n)
        }
        Value::Null | Value::String(_) if key == "ocr_cmd" && raw.is_empty() => Value::Null,
        _ => Value::String(raw.to_owned()),
    })
}

fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
        pairs.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    Ok(pairs)
}
