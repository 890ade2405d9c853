//! Per-cell OCR and CSV serialisation of the resulting table.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell_grid::CellBox;
use crate::error::{Error, Result};
use crate::image_prep::GrayImage;
use crate::region_detect::Region;

/// Recognises the text in one cell crop. `bbox` is the crop's location in
/// the original page.
pub trait OcrClient: Send + Sync {
    fn recognize(&self, crop: &GrayImage, bbox: &Region) -> Result<String>;

    /// Checked once before the first cell of a page is sent.
    fn ready(&self) -> Result<()> {
        Ok(())
    }
}

/// Default OCR command when neither flag nor environment variable is set.
pub const DEFAULT_OCR_COMMAND: &str = "tesseract {input} stdout --psm 6";
/// Environment variable consulted for the OCR command template.
pub const OCR_ENV_VAR: &str = "TABSCAN_OCR_CMD";

/// Runs an external program once per crop.
///
/// The template is split on whitespace. A `{input}` token is replaced by the
/// path of a temporary PNG holding the crop; without one the PNG is written
/// to standard input. Recognised text is read from standard output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOcr {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandOcr {
    pub fn parse(template: &str) -> Result<Self> {
        let mut parts = template.split_whitespace().map(str::to_owned);
        let program = parts.next().ok_or_else(|| Error::Config("empty OCR command".into()))?;
        Ok(Self {
            program,
            args: parts.collect(),
        })
    }

    /// Whether the program can be found, either as a path or on `PATH`.
    pub fn is_available(&self) -> bool {
        find_program(&self.program).is_some()
    }
}

fn find_program(program: &str) -> Option<PathBuf> {
    let p = Path::new(program);
    if p.components().count() > 1 {
        return p.is_file().then(|| p.to_path_buf());
    }
    std::env::var_os("PATH").and_then(|paths| {
        std::env::split_paths(&paths)
            .map(|d| d.join(program))
            .find(|c| c.is_file())
    })
}

impl OcrClient for CommandOcr {
    fn ready(&self) -> Result<()> {
        if self.is_available() {
            Ok(())
        } else {
            Err(Error::Ocr(format!("OCR command {:?} not found", self.program)))
        }
    }

    fn recognize(&self, crop: &GrayImage, _bbox: &Region) -> Result<String> {
        let png = crop.encode_png()?;
        let uses_file = self.args.iter().any(|a| a.contains("{input}"));
        let tmp = if uses_file {
            let mut f = tempfile::Builder::new().suffix(".png").tempfile()?;
            f.write_all(&png)?;
            f.flush()?;
            Some(f)
        } else {
            None
        };
        let args: Vec<String> = match &tmp {
            Some(f) => {
                let path = f.path().to_string_lossy();
                self.args.iter().map(|a| a.replace("{input}", &path)).collect()
            }
            None => self.args.clone(),
        };
        let mut child = Command::new(&self.program)
            .args(&args)
            .stdin(if uses_file { Stdio::null() } else { Stdio::piped() })
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Ocr(format!("cannot start {}: {e}", self.program)))?;
        if !uses_file {
            child.stdin.take().expect("piped stdin").write_all(&png)?;
        }
        let out = child.wait_with_output()?;
        if !out.status.success() {
            return Err(Error::Ocr(format!(
                "{} exited with {}: {}",
                self.program,
                out.status,
                String::from_utf8_lossy(&out.stderr).trim()
            )));
        }
        Ok(String::from_utf8_lossy(&out.stdout).into_owned())
    }
}

/// A word and its box in original page pixels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordBox {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
    pub text: String,
}

impl WordBox {
    fn center2(&self) -> (u64, u64) {
        (
            self.x_min as u64 + self.x_max as u64,
            self.y_min as u64 + self.y_max as u64,
        )
    }
}

/// Test-mode OCR that answers from known word boxes instead of pixels.
///
/// A cell's text is every word whose centre lies inside the cell box,
/// ordered top to bottom, then left to right, joined by spaces.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StubOcr {
    pub words: Vec<WordBox>,
}

/// Suffix of the word-box file read by [`StubOcr::for_image`].
pub const WORDS_SUFFIX: &str = ".words.json";

impl StubOcr {
    pub fn new(words: Vec<WordBox>) -> Self {
        Self { words }
    }

    /// Loads `<dir>/<stem>.words.json` next to `image`. A missing file gives
    /// an OCR that returns no text.
    pub fn for_image(image: &Path) -> Result<Self> {
        let path = words_path(image);
        if !path.exists() {
            log::warn!("no word boxes at {}; stub OCR will return empty text", path.display());
            return Ok(Self::default());
        }
        let words: Vec<WordBox> = serde_json::from_slice(&std::fs::read(&path)?)?;
        Ok(Self { words })
    }
}

/// `<dir>/<stem>.words.json` for an image path.
pub fn words_path(image: &Path) -> PathBuf {
    let stem = image.file_stem().unwrap_or_default().to_string_lossy();
    image.with_file_name(format!("{stem}{WORDS_SUFFIX}"))
}

impl OcrClient for StubOcr {
    fn recognize(&self, _crop: &GrayImage, bbox: &Region) -> Result<String> {
        let mut hits: Vec<&WordBox> = self
            .words
            .iter()
            .filter(|w| {
                let (cx, cy) = w.center2();
                cx >= 2 * bbox.x_min as u64
                    && cx <= 2 * bbox.x_max as u64
                    && cy >= 2 * bbox.y_min as u64
                    && cy <= 2 * bbox.y_max as u64
            })
            .collect();
        hits.sort_by_key(|w| (w.center2().1, w.center2().0));
        Ok(hits.iter().map(|w| w.text.as_str()).collect::<Vec<_>>().join(" "))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Left,
    Up,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TableCell {
    Text(String),
    Empty,
    /// Part of a merged cell; points toward the anchor.
    Extend(Direction),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableModel {
    pub rows: usize,
    pub cols: usize,
    /// Row-major.
    pub cells: Vec<TableCell>,
}

impl TableModel {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cells: vec![TableCell::Empty; rows * cols],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> &TableCell {
        &self.cells[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, cell: TableCell) {
        self.cells[r * self.cols + c] = cell;
    }

    /// Follows `Extend` pointers to the anchor. Pointers leaving the grid
    /// stop at the last valid cell.
    pub fn anchor_of(&self, mut r: usize, mut c: usize) -> (usize, usize) {
        loop {
            match self.get(r, c) {
                TableCell::Extend(Direction::Left) if c > 0 => c -= 1,
                TableCell::Extend(Direction::Up) if r > 0 => r -= 1,
                _ => return (r, c),
            }
        }
    }

    pub fn row(&self, r: usize) -> &[TableCell] {
        &self.cells[r * self.cols..(r + 1) * self.cols]
    }
}

/// Trims OCR output and joins its lines with single spaces.
pub fn clean_ocr_text(s: &str) -> String {
    s.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Runs OCR on every occupied merged cell and builds the table model.
///
/// Returns the model and one warning per cell whose OCR failed; such cells
/// become empty text.
pub fn extract_text(
    client: &dyn OcrClient,
    original: &GrayImage,
    cells: &[CellBox],
    rows: usize,
    cols: usize,
) -> (TableModel, Vec<String>) {
    let texts: Vec<Option<Result<String>>> = cells
        .par_iter()
        .map(|cb| {
            cb.occupied.then(|| {
                let crop = cb.region.crop(original);
                client.recognize(&crop, &cb.region)
            })
        })
        .collect();
    let mut model = TableModel::new(rows, cols);
    let mut warnings = Vec::new();
    for (cb, text) in cells.iter().zip(texts) {
        let comp = cb.component;
        for r in comp.row0..=comp.row1 {
            for c in comp.col0..=comp.col1 {
                let cell = if (r, c) != comp.anchor() {
                    if r == comp.row0 {
                        TableCell::Extend(Direction::Left)
                    } else {
                        TableCell::Extend(Direction::Up)
                    }
                } else {
                    match &text {
                        None => TableCell::Empty,
                        Some(Ok(t)) => TableCell::Text(clean_ocr_text(t)),
                        Some(Err(e)) => {
                            let w = format!("cell ({r},{c}): {e}");
                            log::warn!("{w}");
                            warnings.push(w);
                            TableCell::Text(String::new())
                        }
                    }
                };
                model.set(r, c, cell);
            }
        }
    }
    (model, warnings)
}

/// Spelling of the `EXTEND` tokens.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArrowStyle {
    #[default]
    Ascii,
    Unicode,
}

impl ArrowStyle {
    pub fn token(self, d: Direction) -> &'static str {
        match (self, d) {
            (ArrowStyle::Ascii, Direction::Left) => "EXTEND<-",
            (ArrowStyle::Ascii, Direction::Up) => "EXTEND^",
            (ArrowStyle::Unicode, Direction::Left) => "EXTEND←",
            (ArrowStyle::Unicode, Direction::Up) => "EXTEND↑",
        }
    }
}

fn parse_token(field: &str) -> Option<Direction> {
    match field {
        "EXTEND<-" | "EXTEND←" => Some(Direction::Left),
        "EXTEND^" | "EXTEND↑" => Some(Direction::Up),
        _ => None,
    }
}

/// Writes one CSV record per row, `\n`-terminated, quoting only when needed.
pub fn emit_csv(model: &TableModel, arrows: ArrowStyle, sink: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .quote_style(csv::QuoteStyle::Necessary)
        .from_writer(sink);
    for r in 0..model.rows {
        let fields: Vec<&str> = model
            .row(r)
            .iter()
            .map(|cell| match cell {
                TableCell::Text(t) => t.as_str(),
                TableCell::Empty => "",
                TableCell::Extend(d) => arrows.token(*d),
            })
            .collect();
        w.write_record(&fields)?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_csv_string(model: &TableModel, arrows: ArrowStyle) -> Result<String> {
    let mut buf = Vec::new();
    emit_csv(model, arrows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output of UTF-8 fields is UTF-8"))
}

/// Reads a CSV written by [`emit_csv`]. Both token spellings are accepted;
/// empty fields become `Empty`.
pub fn parse_csv(text: &str) -> Result<TableModel> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(text.as_bytes());
    let mut cells = Vec::new();
    let mut rows = 0;
    let mut cols = 0;
    for rec in rdr.records() {
        let rec = rec?;
        cols = rec.len();
        rows += 1;
        for f in rec.iter() {
            cells.push(match parse_token(f) {
                Some(d) => TableCell::Extend(d),
                None if f.is_empty() => TableCell::Empty,
                None => TableCell::Text(f.to_owned()),
            });
        }
    }
    Ok(TableModel { rows, cols, cells })
}

/// Folds continuation rows into the row above.
///
/// Row `r` is a continuation when the boundary above it was inferred rather
/// than drawn (`inferred_boundary[r]`), its first cell is empty, it holds
/// no merge markers, and each of its texts sits under a text in row `r-1`.
/// Each text is appended to the anchor above it.
pub fn merge_multiline_rows(model: &TableModel, inferred_boundary: &[bool]) -> TableModel {
    let mut rows: Vec<Vec<TableCell>> = (0..model.rows).map(|r| model.row(r).to_vec()).collect();
    let mut r = 1;
    let mut boundary: Vec<bool> = inferred_boundary.to_vec();
    while r < rows.len() {
        let row = &rows[r];
        let above = &rows[r - 1];
        let next_points_up = rows
            .get(r + 1)
            .is_some_and(|n| n.iter().any(|c| matches!(c, TableCell::Extend(Direction::Up))));
        let continuation = boundary.get(r).copied().unwrap_or(false)
            && matches!(row[0], TableCell::Empty)
            && !next_points_up
            && row.iter().any(|c| matches!(c, TableCell::Text(_)))
            && row.iter().zip(above).all(|(c, a)| match c {
                TableCell::Empty => true,
                TableCell::Text(_) => matches!(a, TableCell::Text(_) | TableCell::Extend(_)),
                TableCell::Extend(_) => false,
            });
        if !continuation {
            r += 1;
            continue;
        }
        let removed = rows.remove(r);
        boundary.remove(r);
        let prev = TableModel {
            rows: 1,
            cols: model.cols,
            cells: rows[r - 1].clone(),
        };
        for (c, cell) in removed.into_iter().enumerate() {
            if let TableCell::Text(t) = cell {
                let (_, ac) = prev.anchor_of(0, c);
                if let TableCell::Text(a) = &mut rows[r - 1][ac] {
                    if !t.is_empty() {
                        if !a.is_empty() {
                            a.push(' ');
                        }
                        a.push_str(&t);
                    }
                }
            }
        }
    }
    TableModel {
        rows: rows.len(),
        cols: model.cols,
        cells: rows.into_iter().flatten().collect(),
    }
}
