//! Table location and structure extraction for document page images.
//!
//! The pipeline runs in stages, each in its own module:
//!
//! * [`image_prep`]: grayscale conversion, width normalisation, padding and
//!   overlapping strip slicing, with an invertible [`image_prep::ScaleMap`].
//! * [`region_detect`]: strip band scoring, row grouping, column scoring on
//!   400×400 resamples, and the union ensemble with external proposals.
//! * [`line_detect`]: second-derivative fields, 3×3 max pooling, visible
//!   ruling lines and the data mask.
//! * [`structure_lines`]: quality profiles, the adaptive threshold search for
//!   inferred lines, SMA selection and final line fusion.
//! * [`cell_grid`]: the cell lattice, the two-cell merge classifier contract
//!   and merge resolution.
//! * [`ocr_output`]: per-cell OCR dispatch and CSV serialisation with
//!   `EXTEND` markers.
//! * [`evaluation`]: area and adjacency-relation metrics, ground-truth XML
//!   and the synthetic table generator.
//! * [`pipeline`]: end-to-end orchestration used by the CLI and bindings.

pub mod cell_grid;
pub mod config;
pub mod debug;
pub mod error;
pub mod evaluation;
pub mod image_prep;
pub mod line_detect;
pub mod ocr_output;
pub mod pipeline;
pub mod region_detect;
pub mod structure_lines;

pub use config::PipelineConfig;
pub use error::{Error, Result};
pub use image_prep::{GrayImage, ScaleMap};
pub use region_detect::Region;
