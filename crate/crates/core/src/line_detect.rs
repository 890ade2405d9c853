//! Ruling-line detection from discrete second derivatives, and the data mask
//! of inked pixels that are not part of a ruling line.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_prep::{round_half_up, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Vertical,
    Horizontal,
}

/// Per-pixel |∂²f/∂x²| and |∂²f/∂y²|.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradientField {
    pub width: u32,
    pub height: u32,
    pub d2x: Vec<u16>,
    pub d2y: Vec<u16>,
}

impl GradientField {
    #[inline]
    fn idx(&self, x: u32, y: u32) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub fn d2x_at(&self, x: u32, y: u32) -> u16 {
        self.d2x[self.idx(x, y)]
    }

    pub fn d2y_at(&self, x: u32, y: u32) -> u16 {
        self.d2y[self.idx(x, y)]
    }
}

/// Second differences `|f(x-1) - 2f(x) + f(x+1)|` along each axis, with
/// replicated edges.
pub fn second_derivatives(crop: &GrayImage) -> Result<GradientField> {
    let (w, h) = (crop.width(), crop.height());
    if w < 3 || h < 3 {
        return Err(Error::Degenerate(format!(
            "second derivatives need at least 3x3 pixels, got {w}x{h}"
        )));
    }
    let mut d2x = vec![0u16; (w * h) as usize];
    let mut d2y = vec![0u16; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let c = crop.get(x, y) as i32;
            let l = crop.get(x.saturating_sub(1), y) as i32;
            let r = crop.get((x + 1).min(w - 1), y) as i32;
            let u = crop.get(x, y.saturating_sub(1)) as i32;
            let d = crop.get(x, (y + 1).min(h - 1)) as i32;
            let i = (y * w + x) as usize;
            d2x[i] = (l - 2 * c + r).unsigned_abs() as u16;
            d2y[i] = (u - 2 * c + d).unsigned_abs() as u16;
        }
    }
    Ok(GradientField {
        width: w,
        height: h,
        d2x,
        d2y,
    })
}

fn pool_plane(src: &[u16], w: u32, h: u32) -> Vec<u16> {
    // separable: max over rows, then over columns
    let (wu, hu) = (w as usize, h as usize);
    let mut tmp = vec![0u16; src.len()];
    for y in 0..hu {
        let row = &src[y * wu..(y + 1) * wu];
        for x in 0..wu {
            let a = row[x.saturating_sub(1)];
            let b = row[(x + 1).min(wu - 1)];
            tmp[y * wu + x] = row[x].max(a).max(b);
        }
    }
    let mut out = vec![0u16; src.len()];
    for y in 0..hu {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(hu - 1);
        for x in 0..wu {
            out[y * wu + x] = tmp[y * wu + x].max(tmp[up * wu + x]).max(tmp[down * wu + x]);
        }
    }
    out
}

/// 3×3 max pooling with stride 1 and replicated edges; both planes pooled
/// independently.
pub fn maxpool_3x3_stride1(field: &GradientField) -> GradientField {
    GradientField {
        width: field.width,
        height: field.height,
        d2x: pool_plane(&field.d2x, field.width, field.height),
        d2y: pool_plane(&field.d2y, field.width, field.height),
    }
}

/// Tuning for [`find_real_lines`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineConfig {
    /// Minimum segment length as a fraction of the table span.
    pub seg_frac: f64,
    /// Absolute floor on segment length, in pixels.
    pub min_seg_px: u32,
    /// Shortest piece that counts towards a line's length. A rule broken by
    /// spanning cells is found as several pieces.
    pub min_piece_px: u32,
    /// Longest run of weak pixels tolerated inside one segment.
    pub seg_gap: u32,
    /// Quantile of the pooled field a pixel must reach.
    pub high_quantile: f64,
    /// Absolute floor for the strength threshold.
    pub min_strength: u16,
    /// Maximum coefficient of variation of the cross derivative.
    pub sim_cv: f64,
    /// Floor applied to the mean before computing the coefficient of
    /// variation.
    pub sim_floor: f64,
    /// Accepted lines separated by at most this many rejected lines are
    /// fused.
    pub merge_gap: u32,
}

impl Default for LineConfig {
    fn default() -> Self {
        Self {
            seg_frac: 0.2,
            min_seg_px: 40,
            min_piece_px: 16,
            seg_gap: 4,
            high_quantile: 0.99,
            min_strength: 40,
            sim_cv: 0.5,
            sim_floor: 16.0,
            merge_gap: 2,
        }
    }
}

/// A visible ruling line, extended across the whole table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RealLine {
    pub orientation: Orientation,
    /// x for vertical lines, y for horizontal lines.
    pub coordinate: u32,
    /// Inclusive extent across the line (its detected thickness).
    pub band: (u32, u32),
    /// Hull of the detected pieces along the line, before extension.
    pub source_span: (u32, u32),
    /// Extent along the line after extension: the full table span.
    pub extent: (u32, u32),
}

fn strength_threshold(values: &[u16], cfg: &LineConfig) -> u16 {
    let max = values.iter().copied().max().unwrap_or(0);
    let mut hist = vec![0usize; max as usize + 1];
    for &v in values {
        hist[v as usize] += 1;
    }
    let need = (cfg.high_quantile * values.len() as f64).ceil() as usize;
    let mut acc = 0usize;
    let mut q = max;
    for (v, &c) in hist.iter().enumerate() {
        acc += c;
        if acc >= need.max(1) {
            q = v as u16;
            break;
        }
    }
    q.min(max / 2).max(cfg.min_strength)
}

/// Scans lines along one axis. `strong(i, t)` is the pooled primary
/// derivative and `cross(i, t)` the raw parallel derivative of line `i` at
/// position `t`; `solid(i, piece)` vetoes pieces that are not drawn ink.
///
/// Pieces of at least `min_piece_px` that pass the similarity test are
/// summed; the line is accepted when they add up to the minimum segment
/// length. The reported span is the hull of the pieces.
fn scan_lines(
    n_lines: u32,
    len: u32,
    threshold: u16,
    strong: impl Fn(u32, u32) -> u16,
    cross: impl Fn(u32, u32) -> u16,
    solid: impl Fn(u32, (u32, u32)) -> bool,
    cfg: &LineConfig,
) -> Vec<(u32, (u32, u32))> {
    let min_len = ((cfg.seg_frac * len as f64).ceil() as u32).max(cfg.min_seg_px).max(1);
    let min_piece = cfg.min_piece_px.clamp(1, min_len);
    let mut accepted = Vec::new();
    for i in 0..n_lines {
        let mut total = 0;
        let mut hull: Option<(u32, u32)> = None;
        let mut t = 0;
        while t < len {
            if strong(i, t) < threshold {
                t += 1;
                continue;
            }
            let start = t;
            let mut last = t;
            let mut u = t + 1;
            while u < len && u - last - 1 <= cfg.seg_gap {
                if strong(i, u) >= threshold {
                    last = u;
                }
                u += 1;
            }
            t = last + 1;
            if last - start + 1 < min_piece {
                continue;
            }
            let n = (last - start + 1) as f64;
            let mean = (start..=last).map(|k| cross(i, k) as f64).sum::<f64>() / n;
            let var = (start..=last).map(|k| (cross(i, k) as f64 - mean).powi(2)).sum::<f64>() / n;
            if var.sqrt() <= cfg.sim_cv * mean.max(cfg.sim_floor) && solid(i, (start, last)) {
                total += last - start + 1;
                hull = Some(hull.map_or((start, last), |h| (h.0, last)));
            }
        }
        if let Some(h) = hull.filter(|_| total >= min_len) {
            accepted.push((i, h));
        }
    }
    accepted
}

fn cluster_lines(accepted: &[(u32, (u32, u32))], orientation: Orientation, len: u32, merge_gap: u32) -> Vec<RealLine> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < accepted.len() {
        let mut j = k;
        while j + 1 < accepted.len() && accepted[j + 1].0 - accepted[j].0 <= merge_gap + 1 {
            j += 1;
        }
        let members = &accepted[k..=j];
        let mean = members.iter().map(|m| m.0 as f64).sum::<f64>() / members.len() as f64;
        let span = members
            .iter()
            .fold((u32::MAX, 0), |acc, m| (acc.0.min(m.1 .0), acc.1.max(m.1 .1)));
        out.push(RealLine {
            orientation,
            coordinate: round_half_up(mean) as u32,
            band: (members[0].0, members[members.len() - 1].0),
            source_span: span,
            extent: (0, len - 1),
        });
        k = j + 1;
    }
    out
}

/// Finds ruling lines of one orientation.
///
/// A vertical line is a column containing a segment (at least
/// `max(seg_frac·height, min_seg_px)` long) whose pooled `d2x` stays at or
/// above the strength threshold and whose raw `d2y` values are nearly
/// constant. Neighbouring accepted columns are fused into one line at their
/// centroid. Horizontal lines swap the roles of the axes.
pub fn find_real_lines(
    raw: &GradientField,
    pooled: &GradientField,
    orientation: Orientation,
    cfg: &LineConfig,
) -> Vec<RealLine> {
    lines_with(raw, pooled, orientation, cfg, |_, _| true)
}

/// [`find_real_lines`] that also requires every piece to be drawn solid.
///
/// Rows of text next to white space pass the derivative tests, but text has
/// regular gaps between strokes. A piece survives when some pixel row
/// (column) within one pixel of it is inked over at least `min_cover` of
/// its length.
pub fn find_ruling_lines(
    crop: &GrayImage,
    raw: &GradientField,
    pooled: &GradientField,
    orientation: Orientation,
    cfg: &LineConfig,
    ink_threshold: u8,
    min_cover: f64,
) -> Vec<RealLine> {
    let n = match orientation {
        Orientation::Vertical => crop.width(),
        Orientation::Horizontal => crop.height(),
    };
    let solid = |i: u32, (s, e): (u32, u32)| {
        (i.saturating_sub(1)..=(i + 1).min(n - 1)).any(|c| {
            let inked = (s..=e)
                .filter(|&t| {
                    let v = match orientation {
                        Orientation::Vertical => crop.get(c, t),
                        Orientation::Horizontal => crop.get(t, c),
                    };
                    v < ink_threshold
                })
                .count();
            inked as f64 >= min_cover * (e - s + 1) as f64
        })
    };
    lines_with(raw, pooled, orientation, cfg, solid)
}

fn lines_with(
    raw: &GradientField,
    pooled: &GradientField,
    orientation: Orientation,
    cfg: &LineConfig,
    solid: impl Fn(u32, (u32, u32)) -> bool,
) -> Vec<RealLine> {
    let (w, h) = (pooled.width, pooled.height);
    match orientation {
        Orientation::Vertical => {
            let thr = strength_threshold(&pooled.d2x, cfg);
            let acc = scan_lines(
                w,
                h,
                thr,
                |x, y| pooled.d2x_at(x, y),
                |x, y| raw.d2y_at(x, y),
                solid,
                cfg,
            );
            cluster_lines(&acc, orientation, h, cfg.merge_gap)
        }
        Orientation::Horizontal => {
            let thr = strength_threshold(&pooled.d2y, cfg);
            let acc = scan_lines(
                h,
                w,
                thr,
                |y, x| pooled.d2y_at(x, y),
                |y, x| raw.d2x_at(x, y),
                solid,
                cfg,
            );
            cluster_lines(&acc, orientation, w, cfg.merge_gap)
        }
    }
}

/// Boolean raster of table content: inked pixels away from ruling lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataMask {
    pub width: u32,
    pub height: u32,
    bits: Vec<bool>,
}

impl DataMask {
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Copy of `img` keeping only data pixels; everything else turns white.
    pub fn clean(&self, img: &GrayImage) -> GrayImage {
        GrayImage::from_fn(self.width, self.height, |x, y| {
            if self.get(x, y) {
                img.get(x, y)
            } else {
                255
            }
        })
    }
}

/// Pixels darker than `ink_threshold` that lie more than `line_excl` pixels
/// outside every real line's band.
///
/// A line is only cut out where it is actually drawn: at positions where
/// some pixel of its band belongs to an unbroken ink run at least `min_run`
/// long in the line's direction. Text crossing the line's path where the
/// rule is interrupted (under a spanning cell, say) stays data.
pub fn build_data_mask(
    crop: &GrayImage,
    lines: &[RealLine],
    ink_threshold: u8,
    line_excl: u32,
    min_run: u32,
) -> DataMask {
    let (w, h) = (crop.width(), crop.height());
    let mut excluded = vec![false; w as usize * h as usize];
    for line in lines {
        let (n_across, n_along) = match line.orientation {
            Orientation::Vertical => (w, h),
            Orientation::Horizontal => (h, w),
        };
        let ink = |c: u32, t: u32| match line.orientation {
            Orientation::Vertical => crop.get(c, t) < ink_threshold,
            Orientation::Horizontal => crop.get(t, c) < ink_threshold,
        };
        let mut present = vec![false; n_along as usize];
        for c in line.band.0..=line.band.1.min(n_across - 1) {
            let mut t = 0;
            while t < n_along {
                if !ink(c, t) {
                    t += 1;
                    continue;
                }
                let start = t;
                while t < n_along && ink(c, t) {
                    t += 1;
                }
                if t - start >= min_run {
                    present[start as usize..t as usize].fill(true);
                }
            }
        }
        let lo = line.band.0.saturating_sub(line_excl);
        let hi = (line.band.1 + line_excl).min(n_across - 1);
        for t in 0..n_along {
            if !present[t as usize] {
                continue;
            }
            for c in lo..=hi {
                let (x, y) = match line.orientation {
                    Orientation::Vertical => (c, t),
                    Orientation::Horizontal => (t, c),
                };
                excluded[(y * w + x) as usize] = true;
            }
        }
    }
    DataMask::from_fn(w, h, |x, y| {
        !excluded[(y * w + x) as usize] && crop.get(x, y) < ink_threshold
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(w: u32, h: u32, xs: &[u32], ys: &[u32], t: u32) -> GrayImage {
        let mut img = GrayImage::filled(w, h, 255);
        for &x in xs {
            img.fill_rect(x as i64, 0, (x + t - 1) as i64, h as i64 - 1, 0);
        }
        for &y in ys {
            img.fill_rect(0, y as i64, w as i64 - 1, (y + t - 1) as i64, 0);
        }
        img
    }

    fn lines_of(img: &GrayImage, o: Orientation, cfg: &LineConfig) -> Vec<RealLine> {
        let raw = second_derivatives(img).unwrap();
        let pooled = maxpool_3x3_stride1(&raw);
        find_ruling_lines(img, &raw, &pooled, o, cfg, 128, 0.9)
    }

    #[test]
    fn constant_image_has_zero_field() {
        let f = second_derivatives(&GrayImage::filled(9, 7, 123)).unwrap();
        assert!(f.d2x.iter().chain(&f.d2y).all(|&v| v == 0));
    }

    #[test]
    fn too_small_is_rejected() {
        assert!(matches!(
            second_derivatives(&GrayImage::filled(2, 10, 0)),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn thin_vertical_line_stencil() {
        let img = grid(9, 5, &[4], &[], 1);
        let f = second_derivatives(&img).unwrap();
        assert_eq!(f.d2x_at(4, 2), 510);
        assert_eq!(f.d2x_at(3, 2), 255);
        assert_eq!(f.d2x_at(5, 2), 255);
        assert_eq!(f.d2x_at(1, 2), 0);
        assert!(f.d2y.iter().all(|&v| v == 0));

        let t = grid(5, 9, &[], &[4], 1);
        let g = second_derivatives(&t).unwrap();
        assert_eq!(g.d2y_at(2, 4), 510);
        assert_eq!(g.d2y_at(2, 3), 255);
        assert!(g.d2x.iter().all(|&v| v == 0));
    }

    #[test]
    fn pool_single_pixel() {
        let mut f = GradientField {
            width: 6,
            height: 5,
            d2x: vec![0; 30],
            d2y: vec![0; 30],
        };
        f.d2x[2 * 6 + 3] = 9;
        let p = maxpool_3x3_stride1(&f);
        for y in 0..5 {
            for x in 0..6 {
                let inside = (2..=4).contains(&x) && (1..=3).contains(&y);
                assert_eq!(p.d2x_at(x, y), if inside { 9 } else { 0 });
            }
        }
        assert!(p.d2y.iter().all(|&v| v == 0));
    }

    #[test]
    fn three_column_grid() {
        let img = grid(400, 300, &[0, 120, 260, 399], &[0, 150, 299], 1);
        let v = lines_of(&img, Orientation::Vertical, &LineConfig::default());
        let xs: Vec<u32> = v.iter().map(|l| l.coordinate).collect();
        assert_eq!(xs.len(), 4, "{xs:?}");
        for (got, want) in xs.iter().zip([0, 120, 260, 399]) {
            assert!(got.abs_diff(want) <= 1, "{xs:?}");
        }
        assert!(v.iter().all(|l| l.extent == (0, 299)));
        let hz = lines_of(&img, Orientation::Horizontal, &LineConfig::default());
        assert_eq!(hz.len(), 3);
    }

    #[test]
    fn borderless_has_no_lines() {
        // blocks of "text" 10 rows tall with periodic holes
        let mut img = GrayImage::filled(300, 200, 255);
        for row in 0..6 {
            for col in 0..3 {
                let (x0, y0) = (10 + col * 90, 10 + row * 30);
                for y in 0..10 {
                    for x in 0..40 {
                        if (x + 2 * y) % 5 != 0 {
                            img.set(x0 + x, y0 + y, 0);
                        }
                    }
                }
            }
        }
        for o in [Orientation::Vertical, Orientation::Horizontal] {
            assert!(lines_of(&img, o, &LineConfig::default()).is_empty());
        }
    }

    #[test]
    fn text_edge_is_not_a_line() {
        let mut img = GrayImage::filled(200, 60, 255);
        for y in 20..30 {
            for x in 20..180 {
                if (x + 2 * y) % 5 != 0 {
                    img.set(x, y, 0);
                }
            }
        }
        let raw = second_derivatives(&img).unwrap();
        let pooled = maxpool_3x3_stride1(&raw);
        let cfg = LineConfig::default();
        assert!(!find_real_lines(&raw, &pooled, Orientation::Horizontal, &cfg).is_empty());
        let h = find_ruling_lines(&img, &raw, &pooled, Orientation::Horizontal, &cfg, 128, 0.9);
        assert!(h.is_empty(), "{h:?}");
        let ruled = grid(200, 60, &[], &[30], 1);
        let raw = second_derivatives(&ruled).unwrap();
        let pooled = maxpool_3x3_stride1(&raw);
        let h = find_ruling_lines(&ruled, &raw, &pooled, Orientation::Horizontal, &cfg, 128, 0.9);
        assert_eq!(h.len(), 1);
    }

    #[test]
    fn rule_broken_by_spans_is_found_from_pieces() {
        // 30 px pieces with 20 px holes; no single piece reaches 40 px
        let mut img = GrayImage::filled(100, 130, 255);
        for k in 0..3 {
            img.fill_rect(50, k * 50, 50, k * 50 + 29, 0);
        }
        let v = lines_of(&img, Orientation::Vertical, &LineConfig::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].coordinate, 50);
    }

    #[test]
    fn text_over_interrupted_rule_stays_data() {
        // vertical rule at x = 50 except rows 0..20, where a word crosses it
        let mut img = GrayImage::filled(100, 100, 255);
        img.fill_rect(50, 20, 50, 99, 0);
        img.fill_rect(30, 5, 70, 12, 0);
        let v = lines_of(&img, Orientation::Vertical, &LineConfig::default());
        assert_eq!(v.len(), 1);
        let m = build_data_mask(&img, &v, 128, 2, 15);
        assert!(m.get(50, 8));
        assert!(!m.get(50, 60));
    }

    #[test]
    fn short_divider_is_extended() {
        let mut img = GrayImage::filled(300, 400, 255);
        img.fill_rect(150, 100, 150, 219, 0); // 30% of the height
        let v = lines_of(&img, Orientation::Vertical, &LineConfig::default());
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].coordinate, 150);
        assert_eq!(v[0].extent, (0, 399));
        assert!(v[0].source_span.0 <= 101 && v[0].source_span.1 >= 218);
    }

    #[test]
    fn thick_lines_are_single() {
        for t in 1..=6u32 {
            let img = grid(300, 300, &[100], &[50, 200], t);
            let v = lines_of(&img, Orientation::Vertical, &LineConfig::default());
            assert_eq!(v.len(), 1, "thickness {t}: {v:?}");
            let centre = 100.0 + (t as f64 - 1.0) / 2.0;
            assert!((v[0].coordinate as f64 - centre).abs() <= 1.0);
        }
    }

    #[test]
    fn data_mask_rules() {
        let white = GrayImage::filled(20, 20, 255);
        assert_eq!(build_data_mask(&white, &[], 128, 2, 15).count(), 0);

        let mut word = GrayImage::filled(20, 20, 255);
        word.fill_rect(3, 4, 8, 6, 0);
        let m = build_data_mask(&word, &[], 128, 2, 15);
        assert_eq!(m.count(), 6 * 3);
        assert!(m.get(3, 4) && !m.get(9, 4));

        let img = grid(200, 200, &[0, 100, 199], &[0, 100, 199], 2);
        let mut lines = lines_of(&img, Orientation::Vertical, &LineConfig::default());
        lines.extend(lines_of(&img, Orientation::Horizontal, &LineConfig::default()));
        assert_eq!(build_data_mask(&img, &lines, 128, 2, 15).count(), 0);
    }
}
