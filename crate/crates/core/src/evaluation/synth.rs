//! Seeded synthetic table pages with matching ground truth.
//!
//! Text is drawn with a block glyph: every character is a 5×10 cell whose
//! pixel `(i, j)` is inked unless `(i + 2j + code) % 5 == 0`. Each inked
//! column of a word therefore holds exactly 8 dark pixels and words are
//! 8-connected, which keeps the data footprint predictable. Cell text is
//! left-aligned.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::groundtruth::{GroundTruthCell, GroundTruthDocument, GroundTruthTable};
use crate::error::{Error, Result};
use crate::image_prep::GrayImage;
use crate::ocr_output::WordBox;
use crate::region_detect::Region;

pub const GLYPH_ADVANCE: u32 = 5;
pub const GLYPH_HEIGHT: u32 = 10;
pub const PAGE_WIDTH: u32 = 1000;
pub const MAX_TABLE_WIDTH: u32 = 800;
const PAD_Y: u32 = 6;

const LEXICON: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "omega", "north", "south", "east", "west", "total", "grade", "value", "score",
    "cedar", "maple", "birch", "oak", "lorem", "ipsum", "dolor", "amet", "rate", "mean", "max", "min", "q1", "q2",
    "q3", "q4", "12", "305", "4.5", "0.71", "1999", "2024", "87%", "n/a", "yes", "no", "ratio", "weight", "height",
    "width", "depth", "index", "label", "item", "cost", "price", "units",
];

/// Shape of one synthetic table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub rows: usize,
    pub cols: usize,
    pub ruled: bool,
    /// Ruling thickness in pixels, used when `ruled`.
    pub thickness: u32,
    /// Probability that a cell holds text.
    pub density: f64,
    /// Add one cell spanning two columns (needs at least 2 rows and 2 columns).
    pub span: bool,
    /// Make one inner column hold a single text (needs at least 3 columns).
    pub sparse_column: bool,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            rows: 4,
            cols: 3,
            ruled: false,
            thickness: 1,
            density: 1.0,
            span: false,
            sparse_column: false,
        }
    }
}

/// Where things were drawn, in page pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableLayout {
    pub region: Region,
    /// Centre of every vertical ruling (ruled tables) or of every column
    /// boundary (unruled, outer boundaries at the table edge).
    pub col_lines: Vec<u32>,
    pub row_lines: Vec<u32>,
    /// Anchor `(row, col)` of the spanning cell.
    pub span: Option<(usize, usize)>,
    pub sparse_column: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SyntheticTable {
    pub image: GrayImage,
    pub truth: GroundTruthDocument,
    pub words: Vec<WordBox>,
    pub layout: TableLayout,
    pub spec: SynthSpec,
}

/// Draws `text` with its top-left corner at `(x, y)`.
pub fn render_text(img: &mut GrayImage, x: u32, y: u32, text: &str) {
    for (k, ch) in text.bytes().enumerate() {
        for di in 0..GLYPH_ADVANCE {
            let i = k as u32 * GLYPH_ADVANCE + di;
            for j in 0..GLYPH_HEIGHT {
                if !(i + 2 * j + ch as u32).is_multiple_of(5) {
                    let (px, py) = (x + i, y + j);
                    if px < img.width() && py < img.height() {
                        img.set(px, py, 0);
                    }
                }
            }
        }
    }
}

pub fn text_width(text: &str) -> u32 {
    text.len() as u32 * GLYPH_ADVANCE
}

fn long_word(rng: &mut ChaCha8Rng, len: usize) -> String {
    let mut s = String::new();
    while s.len() < len {
        s.push_str(LEXICON.choose(rng).expect("lexicon is not empty"));
    }
    s.truncate(len);
    s
}

pub fn generate_synthetic(seed: u64, spec: &SynthSpec) -> Result<SyntheticTable> {
    let (rows, cols) = (spec.rows, spec.cols);
    if rows == 0 || cols == 0 {
        return Err(Error::Config(
            "synthetic tables need at least one row and column".into(),
        ));
    }
    if !(0.0..=1.0).contains(&spec.density) {
        return Err(Error::Config(format!("density {} outside [0,1]", spec.density)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = if spec.ruled { spec.thickness.clamp(1, 3) } else { 0 };
    let pad_x = rng.random_range(8..=10u32);

    let span =
        (spec.span && rows >= 2 && cols >= 2).then(|| (rng.random_range(0..rows), rng.random_range(0..cols - 1)));
    let sparse = (spec.sparse_column && cols >= 3).then(|| rng.random_range(1..cols - 1));
    let covered = |r: usize, c: usize| span.is_some_and(|(sr, sc)| r == sr && (c == sc || c == sc + 1));

    let mut text: Vec<Vec<Option<String>>> = vec![vec![None; cols]; rows];
    let pick = |rng: &mut ChaCha8Rng| LEXICON.choose(rng).expect("lexicon is not empty").to_string();
    for (r, row) in text.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            if covered(r, c) {
                continue;
            }
            let density = match sparse {
                Some(s) if c == s => 0.0,
                Some(s) if c + 1 == s || c == s + 1 => 1.0,
                _ => spec.density,
            };
            if rng.random_bool(density) {
                *cell = Some(pick(&mut rng));
            }
        }
    }
    if spec.density > 0.0 {
        // every row and column keeps at least one text so no boundary
        // disappears
        for r in 0..rows {
            let has = (0..cols).any(|c| text[r][c].is_some() || covered(r, c));
            if !has {
                let choices: Vec<usize> = (0..cols).filter(|&c| Some(c) != sparse).collect();
                let c = *choices.choose(&mut rng).unwrap_or(&0);
                text[r][c] = Some(pick(&mut rng));
            }
        }
        for c in 0..cols {
            if !(0..rows).any(|r| text[r][c].is_some()) {
                let choices: Vec<usize> = (0..rows).filter(|&r| !covered(r, c)).collect();
                if let Some(&r) = choices.choose(&mut rng) {
                    text[r][c] = Some(pick(&mut rng));
                }
            }
        }
    }

    let mut content: Vec<u32> = (0..cols)
        .map(|c| {
            (0..rows)
                .filter_map(|r| text[r][c].as_deref().map(text_width))
                .max()
                .unwrap_or(0)
                .max(3 * GLYPH_ADVANCE)
        })
        .collect();
    let span_text = span.map(|(_, sc)| {
        // reach at least 10 px into the next column's text area
        let need = content[sc] + 2 * pad_x + t + 10;
        let len = need.div_ceil(GLYPH_ADVANCE) as usize;
        let s = long_word(&mut rng, len);
        let overflow = text_width(&s) - (content[sc] + 2 * pad_x + t);
        content[sc + 1] = content[sc + 1].max(overflow + 10);
        s
    });

    // boundary positions relative to the table origin
    let mut xs = vec![0u32];
    for &w in &content {
        let last = *xs.last().expect("non-empty");
        xs.push(last + t + w + 2 * pad_x);
    }
    let row_h = GLYPH_HEIGHT + 2 * PAD_Y;
    let ys: Vec<u32> = (0..=rows as u32).map(|k| k * (t + row_h)).collect();
    let table_w = xs[cols] + t;
    let table_h = ys[rows] + t;
    if table_w > MAX_TABLE_WIDTH {
        return Err(Error::Config(format!(
            "table width {table_w} exceeds {MAX_TABLE_WIDTH}"
        )));
    }
    let ox = rng.random_range(40..=PAGE_WIDTH - table_w - 40);
    let oy = rng.random_range(40..=80u32);
    let page_h = oy + table_h + rng.random_range(40..=80u32);
    let mut image = GrayImage::filled(PAGE_WIDTH, page_h, 255);

    if t > 0 {
        let (x_end, y_end) = ((ox + table_w - 1) as i64, (oy + table_h - 1) as i64);
        for &y in &ys {
            let y = (oy + y) as i64;
            image.fill_rect(ox as i64, y, x_end, y + t as i64 - 1, 0);
        }
        for (k, &x) in xs.iter().enumerate() {
            let x = (ox + x) as i64;
            match span {
                Some((sr, sc)) if k == sc + 1 => {
                    let gap0 = (oy + ys[sr] + t) as i64;
                    let gap1 = (oy + ys[sr + 1]) as i64 - 1;
                    image.fill_rect(x, oy as i64, x + t as i64 - 1, gap0 - 1, 0);
                    image.fill_rect(x, gap1 + 1, x + t as i64 - 1, y_end, 0);
                }
                _ => image.fill_rect(x, oy as i64, x + t as i64 - 1, y_end, 0),
            }
        }
    }

    let mut words = Vec::new();
    let mut cells = Vec::new();
    let mut put = |image: &mut GrayImage, r: usize, c: usize, s: &str| {
        let x = ox + xs[c] + t + pad_x;
        let y = oy + ys[r] + t + PAD_Y;
        render_text(image, x, y, s);
        words.push(WordBox {
            x_min: x,
            y_min: y,
            x_max: x + text_width(s) - 1,
            y_max: y + GLYPH_HEIGHT - 1,
            text: s.to_owned(),
        });
    };
    for r in 0..rows {
        for c in 0..cols {
            if covered(r, c) {
                if span.is_some_and(|(sr, sc)| (sr, sc) == (r, c)) {
                    let s = span_text.as_deref().expect("span text exists with a span");
                    put(&mut image, r, c, s);
                    cells.push(GroundTruthCell {
                        row: r,
                        col: c,
                        row_span: 1,
                        col_span: 2,
                        text: s.to_owned(),
                    });
                }
                continue;
            }
            let s = text[r][c].clone().unwrap_or_default();
            if !s.is_empty() {
                put(&mut image, r, c, &s);
            }
            cells.push(GroundTruthCell {
                row: r,
                col: c,
                row_span: 1,
                col_span: 1,
                text: s,
            });
        }
    }

    let region = Region::new(ox, oy, ox + table_w - 1, oy + table_h - 1);
    let centre = |v: u32| v + t.saturating_sub(1) / 2;
    let layout = TableLayout {
        region,
        col_lines: xs.iter().map(|&x| ox + centre(x)).collect(),
        row_lines: ys.iter().map(|&y| oy + centre(y)).collect(),
        span,
        sparse_column: sparse,
    };
    let truth = GroundTruthDocument {
        image: String::new(),
        tables: vec![GroundTruthTable { region, cells }],
    };
    Ok(SyntheticTable {
        image,
        truth,
        words,
        layout,
        spec: spec.clone(),
    })
}

/// Random spec for mixed corpora.
pub fn random_spec(rng: &mut impl Rng) -> SynthSpec {
    let cols = rng.random_range(2..=6);
    SynthSpec {
        rows: rng.random_range(2..=8),
        cols,
        ruled: rng.random_bool(0.5),
        thickness: rng.random_range(1..=3),
        density: rng.random_range(0.7..=1.0),
        span: rng.random_bool(0.3),
        sparse_column: cols >= 3 && rng.random_bool(0.1),
    }
}

/// Unruled table whose middle column holds a single text between two full
/// columns.
pub fn sparse_column_fixture(seed: u64) -> Result<SyntheticTable> {
    generate_synthetic(
        seed,
        &SynthSpec {
            rows: 8,
            cols: 3,
            ruled: false,
            thickness: 1,
            density: 1.0,
            span: false,
            sparse_column: true,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyph_columns_hold_eight_ink_pixels() {
        let mut img = GrayImage::filled(40, 10, 255);
        render_text(&mut img, 0, 0, "abc");
        for x in 0..15 {
            assert_eq!((0..10).filter(|&y| img.get(x, y) == 0).count(), 8);
        }
        assert!((15..40).all(|x| (0..10).all(|y| img.get(x, y) == 255)));
    }

    #[test]
    fn deterministic() {
        let spec = SynthSpec {
            ruled: true,
            span: true,
            ..SynthSpec::default()
        };
        let a = generate_synthetic(7, &spec).unwrap();
        let b = generate_synthetic(7, &spec).unwrap();
        assert_eq!(a.image, b.image);
        assert_eq!(a.truth, b.truth);
        let c = generate_synthetic(8, &spec).unwrap();
        assert_ne!(a.image, c.image);
    }

    #[test]
    fn density_zero_has_no_text() {
        let s = generate_synthetic(
            1,
            &SynthSpec {
                density: 0.0,
                ..SynthSpec::default()
            },
        )
        .unwrap();
        assert!(s.truth.tables[0].cells.iter().all(|c| c.text.is_empty()));
        assert!(s.words.is_empty());
    }

    #[test]
    fn span_present() {
        for seed in 0..20 {
            let s = generate_synthetic(
                seed,
                &SynthSpec {
                    span: true,
                    ..SynthSpec::default()
                },
            )
            .unwrap();
            let t = &s.truth.tables[0];
            assert_eq!(t.cells.iter().filter(|c| c.col_span == 2).count(), 1);
            assert_eq!((t.rows(), t.cols()), (4, 3));
        }
    }

    #[test]
    fn sparse_column_has_one_text() {
        let s = sparse_column_fixture(3).unwrap();
        let sc = s.layout.sparse_column.unwrap();
        let t = &s.truth.tables[0];
        let n = t.cells.iter().filter(|c| c.col == sc && !c.text.is_empty()).count();
        assert_eq!(n, 1);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(generate_synthetic(
            0,
            &SynthSpec {
                rows: 0,
                ..SynthSpec::default()
            }
        )
        .is_err());
        assert!(generate_synthetic(
            0,
            &SynthSpec {
                density: 1.5,
                ..SynthSpec::default()
            }
        )
        .is_err());
    }
}
