//! Table region detection: band flags over strips, row grouping, column
//! flags over 400×400 resamples, inverse mapping to original coordinates and
//! the union ensemble with externally proposed regions.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_prep::{resample, GrayImage, ScaleMap, Strip, BANDS_PER_STRIP, BAND_HEIGHT, STRIP_INNER_OFFSET};

/// Side of the square each row group is resampled to for column scoring.
pub const COLUMN_SQUARE: u32 = 400;

/// Axis-aligned rectangle with inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Region {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
}

impl Region {
    pub fn new(x_min: u32, y_min: u32, x_max: u32, y_max: u32) -> Self {
        debug_assert!(x_min <= x_max && y_min <= y_max);
        Self {
            x_min,
            y_min,
            x_max,
            y_max,
        }
    }

    pub fn width(&self) -> u32 {
        self.x_max - self.x_min + 1
    }

    pub fn height(&self) -> u32 {
        self.y_max - self.y_min + 1
    }

    pub fn area(&self) -> u64 {
        self.width() as u64 * self.height() as u64
    }

    /// True when the two regions share at least one pixel.
    pub fn overlaps(&self, other: &Region) -> bool {
        self.x_min <= other.x_max && other.x_min <= self.x_max && self.y_min <= other.y_max && other.y_min <= self.y_max
    }

    pub fn union(&self, other: &Region) -> Region {
        Region {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn intersection(&self, other: &Region) -> Option<Region> {
        self.overlaps(other).then(|| Region {
            x_min: self.x_min.max(other.x_min),
            y_min: self.y_min.max(other.y_min),
            x_max: self.x_max.min(other.x_max),
            y_max: self.y_max.min(other.y_max),
        })
    }

    pub fn contains(&self, other: &Region) -> bool {
        self.x_min <= other.x_min && self.y_min <= other.y_min && self.x_max >= other.x_max && self.y_max >= other.y_max
    }

    /// Grows by `margin` on every side, clipped to a `width`×`height` image.
    pub fn expanded(&self, margin: u32, width: u32, height: u32) -> Region {
        Region {
            x_min: self.x_min.saturating_sub(margin),
            y_min: self.y_min.saturating_sub(margin),
            x_max: (self.x_max + margin).min(width - 1),
            y_max: (self.y_max + margin).min(height - 1),
        }
    }

    pub fn crop(&self, img: &GrayImage) -> GrayImage {
        img.crop(self.x_min, self.y_min, self.width(), self.height())
    }
}

/// Scores the four 8-row bands in a strip's inner window.
pub trait BandScorer: Send + Sync {
    fn score_strip(&self, strip: &Strip) -> Vec<bool>;
}

/// Scores each column of a 400×400 row-group image.
pub trait ColumnScorer: Send + Sync {
    fn score_columns(&self, image: &GrayImage) -> Vec<bool>;
}

/// Deterministic ink-density scorer standing in for the learned band and
/// column classifiers.
///
/// A band (column) is positive when its ink density is strictly above
/// `density_threshold`, when it contains a dark line spanning at least
/// `line_fraction` of the image, or when it is enclosed by inked rows
/// (columns) within `context` pixels on both sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InkScorer {
    pub ink_threshold: u8,
    pub density_threshold: f64,
    pub band_context: u32,
    pub column_context: u32,
    pub line_fraction: f64,
}

impl Default for InkScorer {
    fn default() -> Self {
        Self {
            ink_threshold: 128,
            density_threshold: 0.01,
            band_context: 16,
            column_context: 20,
            line_fraction: 0.5,
        }
    }
}

struct LineProfile {
    ink: Vec<u32>,
    has_line: Vec<bool>,
    len: u32,
}

impl InkScorer {
    fn rows_profile(&self, img: &GrayImage) -> LineProfile {
        let (w, h) = (img.width(), img.height());
        let mut ink = vec![0u32; h as usize];
        let mut has_line = vec![false; h as usize];
        let need = (self.line_fraction * w as f64).ceil() as u32;
        for y in 0..h {
            let (mut run, mut best) = (0u32, 0u32);
            for x in 0..w {
                if img.get(x, y) < self.ink_threshold {
                    ink[y as usize] += 1;
                    run += 1;
                    best = best.max(run);
                } else {
                    run = 0;
                }
            }
            has_line[y as usize] = best >= need.max(1);
        }
        LineProfile { ink, has_line, len: w }
    }

    fn cols_profile(&self, img: &GrayImage) -> LineProfile {
        let (w, h) = (img.width(), img.height());
        let mut ink = vec![0u32; w as usize];
        let mut has_line = vec![false; w as usize];
        let need = (self.line_fraction * h as f64).ceil() as u32;
        for x in 0..w {
            let (mut run, mut best) = (0u32, 0u32);
            for y in 0..h {
                if img.get(x, y) < self.ink_threshold {
                    ink[x as usize] += 1;
                    run += 1;
                    best = best.max(run);
                } else {
                    run = 0;
                }
            }
            has_line[x as usize] = best >= need.max(1);
        }
        LineProfile { ink, has_line, len: h }
    }

    fn flag(&self, p: &LineProfile, range: Range<usize>, context: usize) -> bool {
        let cells = (range.len() as u64 * p.len as u64) as f64;
        let ink: u64 = p.ink[range.clone()].iter().map(|&v| v as u64).sum();
        if ink as f64 / cells > self.density_threshold {
            return true;
        }
        if p.has_line[range.clone()].iter().any(|&l| l) {
            return true;
        }
        if context == 0 {
            return false;
        }
        let inked = |i: usize| p.ink[i] as f64 / p.len as f64 > self.density_threshold || p.has_line[i];
        let before = range.start.saturating_sub(context)..range.start;
        let after = range.end..(range.end + context).min(p.ink.len());
        before.into_iter().any(inked) && after.into_iter().any(inked)
    }
}

impl BandScorer for InkScorer {
    fn score_strip(&self, strip: &Strip) -> Vec<bool> {
        let p = self.rows_profile(&strip.pixels);
        let ctx = (self.band_context as usize).min(STRIP_INNER_OFFSET as usize);
        (0..BANDS_PER_STRIP)
            .map(|i| {
                let a = (STRIP_INNER_OFFSET + i as u32 * BAND_HEIGHT) as usize;
                self.flag(&p, a..a + BAND_HEIGHT as usize, ctx)
            })
            .collect()
    }
}

impl ColumnScorer for InkScorer {
    fn score_columns(&self, image: &GrayImage) -> Vec<bool> {
        let p = self.cols_profile(image);
        (0..image.width() as usize)
            .map(|x| self.flag(&p, x..x + 1, self.column_context as usize))
            .collect()
    }
}

pub fn default_band_scorer(strip: &Strip) -> Vec<bool> {
    InkScorer::default().score_strip(strip)
}

pub fn default_column_scorer(image: &GrayImage) -> Vec<bool> {
    InkScorer::default().score_columns(image)
}

/// Padded-page rows covered by band flag `index`.
pub fn band_rows(index: usize) -> Range<u32> {
    let start = STRIP_INNER_OFFSET + index as u32 * BAND_HEIGHT;
    start..start + BAND_HEIGHT
}

/// Runs the band scorer over every strip and concatenates the flags. Bands
/// that do not intersect `content_rows` (the unpadded page) are forced false.
pub fn detect_row_bands(strips: &[Strip], scorer: &dyn BandScorer, content_rows: Range<u32>) -> Result<Vec<bool>> {
    let mut flags = Vec::with_capacity(strips.len() * BANDS_PER_STRIP);
    for strip in strips {
        let out = scorer.score_strip(strip);
        if out.len() != BANDS_PER_STRIP {
            return Err(Error::Contract(format!(
                "band scorer returned {} flags for strip at row {}, expected {BANDS_PER_STRIP}",
                out.len(),
                strip.origin_y
            )));
        }
        flags.extend(out);
    }
    for (i, f) in flags.iter_mut().enumerate() {
        let rows = band_rows(i);
        if rows.end <= content_rows.start || rows.start >= content_rows.end {
            *f = false;
        }
    }
    Ok(flags)
}

/// Inclusive run of band indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandRun {
    pub start: usize,
    pub end: usize,
}

impl BandRun {
    pub fn rows(&self) -> Range<u32> {
        band_rows(self.start).start..band_rows(self.end).end
    }
}

/// Maximal runs of true flags, joining runs separated by at most
/// `merge_gap` false entries.
pub fn group_runs(flags: &[bool], merge_gap: usize) -> Vec<(usize, usize)> {
    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut i = 0;
    while i < flags.len() {
        if !flags[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < flags.len() && flags[i] {
            i += 1;
        }
        let end = i - 1;
        match runs.last_mut() {
            Some(last) if start - last.1 - 1 <= merge_gap => last.1 = end,
            _ => runs.push((start, end)),
        }
    }
    runs
}

/// Groups positive band flags into row intervals. An empty result means no
/// table was found on the page.
pub fn group_rows(flags: &[bool], merge_gap: usize) -> Vec<BandRun> {
    group_runs(flags, merge_gap)
        .into_iter()
        .map(|(start, end)| BandRun { start, end })
        .collect()
}

/// Crops `rows` (full width) from the padded page and resamples to 400×400.
pub fn row_group_image(padded: &GrayImage, rows: &Range<u32>) -> GrayImage {
    let start = rows.start.min(padded.height() - 1);
    let end = rows.end.min(padded.height()).max(start + 1);
    let crop = padded.crop(0, start, padded.width(), end - start);
    resample(&crop, COLUMN_SQUARE, COLUMN_SQUARE)
}

/// Maximal runs of positive columns (inclusive, resampled coordinates).
pub fn detect_columns(group_image: &GrayImage, scorer: &dyn ColumnScorer) -> Result<Vec<(u32, u32)>> {
    let out = scorer.score_columns(group_image);
    if out.len() != COLUMN_SQUARE as usize {
        return Err(Error::Contract(format!(
            "column scorer returned {} flags, expected {COLUMN_SQUARE}",
            out.len()
        )));
    }
    Ok(group_runs(&out, 0)
        .into_iter()
        .map(|(a, b)| (a as u32, b as u32))
        .collect())
}

/// Column intervals found for one row group, together with the working-image
/// span that was squared.
#[derive(Debug, Clone)]
pub struct RowGroupColumns {
    pub rows: Range<u32>,
    pub crop_x: u32,
    pub crop_width: u32,
    pub columns: Vec<(u32, u32)>,
}

/// Maps a column interval of the 400-wide square back to working x pixels.
pub fn column_to_working(interval: (u32, u32), crop_x: u32, crop_width: u32) -> (u32, u32) {
    let ratio = crop_width as f64 / COLUMN_SQUARE as f64;
    let lo = (interval.0 as f64 * ratio).floor() as u32;
    let hi = ((interval.1 as f64 + 1.0) * ratio).ceil() as u32;
    (crop_x + lo, crop_x + hi.max(lo + 1) - 1)
}

/// Converts every (row group × column interval) pair into a region in
/// original-image coordinates. Regions that collapse after clamping are
/// dropped with a warning.
pub fn to_regions(
    groups: &[RowGroupColumns],
    scale: &ScaleMap,
    original_width: u32,
    original_height: u32,
) -> Vec<Region> {
    let mut out = Vec::new();
    for g in groups {
        let y0 = (g.rows.start as f64 - scale.pad_top as f64) * scale.scale_y;
        let y1 = (g.rows.end as f64 - scale.pad_top as f64) * scale.scale_y;
        for &interval in &g.columns {
            let (wx0, wx1) = column_to_working(interval, g.crop_x, g.crop_width);
            let x0 = wx0 as f64 * scale.scale_x;
            let x1 = (wx1 as f64 + 1.0) * scale.scale_x;
            let xa = x0.floor().max(0.0);
            let ya = y0.floor().max(0.0);
            let xb = (x1.ceil() - 1.0).min(original_width as f64 - 1.0);
            let yb = (y1.ceil() - 1.0).min(original_height as f64 - 1.0);
            if xb < xa || yb < ya {
                log::warn!(
                    "dropping degenerate region from rows {:?} columns {:?}",
                    g.rows,
                    interval
                );
                continue;
            }
            out.push(Region::new(xa as u32, ya as u32, xb as u32, yb as u32));
        }
    }
    out
}

/// Fixed-point bounding-box union of two region sets.
///
/// Any two overlapping regions are replaced by their bounding box until no
/// overlaps remain; regions overlapping nothing are kept from both inputs.
/// The result is sorted.
pub fn ensemble_union(primary: &[Region], proposals: &[Region]) -> Vec<Region> {
    let mut regions: Vec<Region> = primary.iter().chain(proposals).copied().collect();
    loop {
        let n = regions.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut i: usize) -> usize {
            while p[i] != i {
                p[i] = p[p[i]];
                i = p[i];
            }
            i
        }
        let mut merged = false;
        for i in 0..n {
            for j in i + 1..n {
                if regions[i].overlaps(&regions[j]) {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    if a != b {
                        parent[b] = a;
                        merged = true;
                    }
                }
            }
        }
        if !merged {
            break;
        }
        let mut boxes: Vec<Option<Region>> = vec![None; n];
        for i in 0..n {
            let root = find(&mut parent, i);
            boxes[root] = Some(match boxes[root] {
                Some(b) => b.union(&regions[i]),
                None => regions[i],
            });
        }
        regions = boxes.into_iter().flatten().collect();
    }
    regions.sort();
    regions.dedup();
    regions
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image_prep::{slice_strips, STRIP_HEIGHT};

    fn strip_of(v: u8) -> Strip {
        Strip {
            origin_y: 0,
            pixels: GrayImage::filled(100, STRIP_HEIGHT, v),
        }
    }

    #[test]
    fn default_band_scorer_extremes() {
        assert_eq!(default_band_scorer(&strip_of(255)), vec![false; 4]);
        assert_eq!(default_band_scorer(&strip_of(0)), vec![true; 4]);
    }

    #[test]
    fn density_at_threshold_is_negative() {
        // 100 wide, 8-row band: 800 pixels; 8 ink pixels = exactly 1%
        let mut img = GrayImage::filled(100, STRIP_HEIGHT, 255);
        for y in 16..24 {
            img.set(0, y, 0);
        }
        let scorer = InkScorer {
            band_context: 0,
            ..InkScorer::default()
        };
        let strip = Strip {
            origin_y: 0,
            pixels: img.clone(),
        };
        assert!(!scorer.score_strip(&strip)[0]);
        img.set(1, 16, 0);
        let strip = Strip {
            origin_y: 0,
            pixels: img,
        };
        assert!(scorer.score_strip(&strip)[0]);
    }

    #[test]
    fn group_rows_examples() {
        let f = [false, false, true, true, true, false, true, true, false];
        let runs = group_rows(&f, 0);
        assert_eq!(runs, vec![BandRun { start: 2, end: 4 }, BandRun { start: 6, end: 7 }]);
        assert!(group_rows(&[false; 5], 1).is_empty());
        assert_eq!(group_rows(&[true, false, true], 1), vec![BandRun { start: 0, end: 2 }]);
        assert_eq!(BandRun { start: 0, end: 3 }.rows(), 16..48);
    }

    #[test]
    fn band_arity_is_checked() {
        struct Bad;
        impl BandScorer for Bad {
            fn score_strip(&self, _: &Strip) -> Vec<bool> {
                vec![true; 3]
            }
        }
        let strips = slice_strips(&GrayImage::filled(10, 96, 255));
        assert!(matches!(
            detect_row_bands(&strips, &Bad, 16..80),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn ten_strips_give_forty_flags() {
        let strips = slice_strips(&GrayImage::filled(50, 332, 255));
        let flags = detect_row_bands(&strips, &InkScorer::default(), 16..316).unwrap();
        assert_eq!(flags.len(), 40);
        assert!(flags.iter().all(|f| !f));
    }

    #[test]
    fn padding_bands_forced_false() {
        let strips = slice_strips(&GrayImage::filled(50, 96, 0));
        let flags = detect_row_bands(&strips, &InkScorer::default(), 32..64).unwrap();
        // bands: [16,24) [24,32) [32,40) ... [72,80)
        assert_eq!(flags, vec![false, false, true, true, true, true, false, false]);
    }

    #[test]
    fn columns_blank_and_arity() {
        let blank = GrayImage::filled(400, 400, 255);
        assert!(detect_columns(&blank, &InkScorer::default()).unwrap().is_empty());
        struct Short;
        impl ColumnScorer for Short {
            fn score_columns(&self, _: &GrayImage) -> Vec<bool> {
                vec![false; 10]
            }
        }
        assert!(matches!(detect_columns(&blank, &Short), Err(Error::Contract(_))));
    }

    #[test]
    fn to_regions_examples() {
        let scale = ScaleMap {
            pad_top: 16,
            pad_bottom: 16,
            ..ScaleMap::identity()
        };
        let g = RowGroupColumns {
            rows: 16..48,
            crop_x: 0,
            crop_width: 800,
            columns: vec![(0, 399)],
        };
        let r = to_regions(std::slice::from_ref(&g), &scale, 800, 600);
        assert_eq!(r, vec![Region::new(0, 0, 799, 31)]);

        let doubled = ScaleMap {
            scale_x: 2.0,
            scale_y: 2.0,
            ..scale
        };
        let r = to_regions(&[g], &doubled, 1600, 1200);
        assert_eq!(r, vec![Region::new(0, 0, 1599, 63)]);

        assert_eq!(column_to_working((100, 199), 200, 400), (300, 399));
    }

    #[test]
    fn padding_only_region_dropped() {
        let scale = ScaleMap {
            pad_top: 16,
            pad_bottom: 16,
            ..ScaleMap::identity()
        };
        let g = RowGroupColumns {
            rows: 0..16,
            crop_x: 0,
            crop_width: 800,
            columns: vec![(0, 10)],
        };
        assert!(to_regions(&[g], &scale, 800, 100).is_empty());
    }

    #[test]
    fn ensemble_examples() {
        let a = Region::new(0, 0, 100, 100);
        let b = Region::new(50, 50, 150, 150);
        assert_eq!(ensemble_union(&[a], &[b]), vec![Region::new(0, 0, 150, 150)]);
        assert_eq!(ensemble_union(&[a], &[a]), vec![a]);
        let c = Region::new(200, 200, 300, 300);
        assert_eq!(ensemble_union(&[a], &[c]), vec![a, c]);
        // touching edges without a shared pixel stay apart
        let d = Region::new(101, 0, 120, 100);
        assert_eq!(ensemble_union(&[a], &[d]).len(), 2);
    }

    #[test]
    fn ensemble_chains_to_fixed_point() {
        // b bridges a and c only after a∪b grows
        let a = Region::new(0, 0, 10, 10);
        let b = Region::new(5, 5, 30, 12);
        let c = Region::new(25, 0, 40, 4);
        assert_eq!(ensemble_union(&[a, c], &[b]), vec![Region::new(0, 0, 40, 12)]);
    }
}
