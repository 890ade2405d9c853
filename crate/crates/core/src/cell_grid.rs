//! The cell lattice, the two-cell merge classifier and merge resolution.

use std::io::Write;
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image_prep::{resample, round_half_up, GrayImage, ScaleMap};
use crate::region_detect::Region;
use crate::structure_lines::FinalLines;

/// Side of each resampled cell in a classifier view.
pub const CELL_VIEW: u32 = 100;
pub const VIEW_WIDTH: u32 = 2 * CELL_VIEW;
pub const VIEW_HEIGHT: u32 = CELL_VIEW;
/// Width of the central band inspected for ink crossing the seam.
pub const SEAM_BAND: u32 = 20;

/// Rectangular lattice of cells. Neighbouring cells share their boundary
/// coordinate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellGrid {
    pub row_bounds: Vec<u32>,
    pub col_bounds: Vec<u32>,
}

impl CellGrid {
    pub fn rows(&self) -> usize {
        self.row_bounds.len() - 1
    }

    pub fn cols(&self) -> usize {
        self.col_bounds.len() - 1
    }

    /// Inclusive box of cell `(r, c)` in crop coordinates.
    pub fn cell_box(&self, r: usize, c: usize) -> Region {
        Region::new(
            self.col_bounds[c],
            self.row_bounds[r],
            self.col_bounds[c + 1],
            self.row_bounds[r + 1],
        )
    }
}

pub fn build_grid(vertical: &FinalLines, horizontal: &FinalLines) -> Result<CellGrid> {
    for (name, lines) in [("vertical", vertical), ("horizontal", horizontal)] {
        if lines.coordinates.len() < 2 {
            return Err(Error::DegenerateTable(format!(
                "{name} axis has {} line(s), need at least 2",
                lines.coordinates.len()
            )));
        }
        if lines.coordinates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::DegenerateTable(format!(
                "{name} lines are not strictly increasing"
            )));
        }
    }
    Ok(CellGrid {
        row_bounds: horizontal.coordinates.clone(),
        col_bounds: vertical.coordinates.clone(),
    })
}

/// Builds the 200×100 view for two adjacent cells.
///
/// Each cell is resampled to 100×100 on its own. A left/right pair is placed
/// as is; an upper/lower pair is rotated a quarter turn counter-clockwise so
/// the upper cell ends up on the left and the shared boundary is vertical.
/// A cell paired with itself is used for 1×1 grids.
pub fn prepare_pair(crop: &GrayImage, grid: &CellGrid, a: (usize, usize), b: (usize, usize)) -> Result<GrayImage> {
    let vertical = if a.0 == b.0 && b.1 == a.1 + 1 {
        false
    } else if a.1 == b.1 && b.0 == a.0 + 1 {
        true
    } else if a == b {
        false
    } else {
        return Err(Error::Contract(format!("cells {a:?} and {b:?} are not adjacent")));
    };
    let cell_image = |(r, c): (usize, usize)| {
        let bx = grid.cell_box(r, c);
        let img = bx.crop(crop);
        let img = resample(&img, CELL_VIEW, CELL_VIEW);
        if vertical {
            img.rotate_ccw()
        } else {
            img
        }
    };
    // a quarter turn counter-clockwise moves the upper cell's bottom edge
    // to its right side, next to the lower cell's former top edge
    let (left, right) = (cell_image(a), cell_image(b));
    Ok(GrayImage::from_fn(VIEW_WIDTH, VIEW_HEIGHT, |x, y| {
        if x < CELL_VIEW {
            left.get(x, y)
        } else {
            right.get(x - CELL_VIEW, y)
        }
    }))
}

/// Classifier output for one pair, each value in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairDecision {
    pub left_data: f64,
    pub right_data: f64,
    pub merge: f64,
}

pub trait MergeClassifier: Send + Sync {
    fn classify(&self, view: &GrayImage) -> Result<PairDecision>;
}

fn check_view(view: &GrayImage) -> Result<()> {
    if view.width() != VIEW_WIDTH || view.height() != VIEW_HEIGHT {
        return Err(Error::Contract(format!(
            "classifier view must be {VIEW_WIDTH}x{VIEW_HEIGHT}, got {}x{}",
            view.width(),
            view.height()
        )));
    }
    Ok(())
}

/// Ink-based stand-in classifier.
///
/// A half has data when its ink fraction exceeds `empty_eps`. A merge is
/// reported when an 8-connected ink component inside the central
/// `SEAM_BAND` columns has pixels on both sides of the seam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InkMergeClassifier {
    pub ink_threshold: u8,
    pub empty_eps: f64,
}

impl Default for InkMergeClassifier {
    fn default() -> Self {
        Self {
            ink_threshold: 128,
            empty_eps: 0.002,
        }
    }
}

impl InkMergeClassifier {
    fn half_has_data(&self, view: &GrayImage, x0: u32) -> bool {
        let mut ink = 0usize;
        for y in 0..VIEW_HEIGHT {
            for x in x0..x0 + CELL_VIEW {
                if view.get(x, y) < self.ink_threshold {
                    ink += 1;
                }
            }
        }
        ink as f64 / (CELL_VIEW * CELL_VIEW) as f64 > self.empty_eps
    }

    fn ink_crosses_seam(&self, view: &GrayImage) -> bool {
        let bx0 = CELL_VIEW - SEAM_BAND / 2;
        let bw = SEAM_BAND as usize;
        let h = VIEW_HEIGHT as usize;
        let ink = |x: usize, y: usize| view.get(bx0 + x as u32, y as u32) < self.ink_threshold;
        let mut label = vec![usize::MAX; bw * h];
        let mut next = 0;
        let seam = (SEAM_BAND / 2) as usize;
        for sy in 0..h {
            for sx in 0..bw {
                if !ink(sx, sy) || label[sy * bw + sx] != usize::MAX {
                    continue;
                }
                let (mut left, mut right) = (false, false);
                let mut stack = vec![(sx, sy)];
                label[sy * bw + sx] = next;
                while let Some((x, y)) = stack.pop() {
                    if x < seam {
                        left = true;
                    } else {
                        right = true;
                    }
                    for ny in y.saturating_sub(1)..=(y + 1).min(h - 1) {
                        for nx in x.saturating_sub(1)..=(x + 1).min(bw - 1) {
                            if label[ny * bw + nx] == usize::MAX && ink(nx, ny) {
                                label[ny * bw + nx] = next;
                                stack.push((nx, ny));
                            }
                        }
                    }
                }
                if left && right {
                    return true;
                }
                next += 1;
            }
        }
        false
    }
}

impl MergeClassifier for InkMergeClassifier {
    fn classify(&self, view: &GrayImage) -> Result<PairDecision> {
        check_view(view)?;
        let b = |v: bool| if v { 1.0 } else { 0.0 };
        Ok(PairDecision {
            left_data: b(self.half_has_data(view, 0)),
            right_data: b(self.half_has_data(view, CELL_VIEW)),
            merge: b(self.ink_crosses_seam(view)),
        })
    }
}

pub fn default_merge_classifier(view: &GrayImage) -> Result<PairDecision> {
    InkMergeClassifier::default().classify(view)
}

/// External classifier: the view is written as PNG to the command's
/// standard input, which must print three numbers (left data, right data,
/// merge) on standard output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandClassifier {
    pub program: String,
    pub args: Vec<String>,
}

impl CommandClassifier {
    /// Splits a command line on whitespace.
    pub fn parse(command: &str) -> Result<Self> {
        let mut parts = command.split_whitespace().map(str::to_owned);
        let program = parts
            .next()
            .ok_or_else(|| Error::Config("empty classifier command".into()))?;
        Ok(Self {
            program,
            args: parts.collect(),
        })
    }
}

impl MergeClassifier for CommandClassifier {
    fn classify(&self, view: &GrayImage) -> Result<PairDecision> {
        check_view(view)?;
        let png = view.encode_png()?;
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Contract(format!("cannot start classifier {}: {e}", self.program)))?;
        child.stdin.take().expect("piped stdin").write_all(&png)?;
        let out = child.wait_with_output()?;
        if !out.status.success() {
            return Err(Error::Contract(format!("classifier exited with {}", out.status)));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let vals: Vec<f64> = text
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Contract(format!("classifier output {text:?}: {e}")))?;
        match vals[..] {
            [l, r, m] if [l, r, m].iter().all(|v| (0.0..=1.0).contains(v)) => Ok(PairDecision {
                left_data: l,
                right_data: r,
                merge: m,
            }),
            _ => Err(Error::Contract(format!(
                "classifier must print three values in [0,1], got {text:?}"
            ))),
        }
    }
}

/// Decisions for every adjacent pair. `right[r][c]` covers `(r,c)|(r,c+1)`,
/// `down[r][c]` covers `(r,c)|(r+1,c)`. For a 1×1 grid `single` holds the
/// cell classified against itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDecisions {
    pub rows: usize,
    pub cols: usize,
    pub right: Vec<Vec<PairDecision>>,
    pub down: Vec<Vec<PairDecision>>,
    pub single: Option<PairDecision>,
}

/// Classifies all horizontal pairs, then all vertical pairs.
pub fn classify_pairs(crop: &GrayImage, grid: &CellGrid, classifier: &dyn MergeClassifier) -> Result<PairDecisions> {
    let (rows, cols) = (grid.rows(), grid.cols());
    let mut jobs: Vec<((usize, usize), (usize, usize))> = Vec::new();
    for r in 0..rows {
        for c in 0..cols.saturating_sub(1) {
            jobs.push(((r, c), (r, c + 1)));
        }
    }
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols {
            jobs.push(((r, c), (r + 1, c)));
        }
    }
    if jobs.is_empty() {
        jobs.push(((0, 0), (0, 0)));
    }
    let results: Vec<PairDecision> = jobs
        .par_iter()
        .map(|&(a, b)| classifier.classify(&prepare_pair(crop, grid, a, b)?))
        .collect::<Result<_>>()?;
    let mut it = results.into_iter();
    if rows == 1 && cols == 1 {
        return Ok(PairDecisions {
            rows,
            cols,
            right: vec![vec![]],
            down: vec![],
            single: it.next(),
        });
    }
    let right = (0..rows).map(|_| it.by_ref().take(cols - 1).collect()).collect();
    let down = (0..rows - 1).map(|_| it.by_ref().take(cols).collect()).collect();
    Ok(PairDecisions {
        rows,
        cols,
        right,
        down,
        single: None,
    })
}

/// Inclusive rectangle of grid cells; its anchor is `(row0, col0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Component {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
}

impl Component {
    pub fn anchor(&self) -> (usize, usize) {
        (self.row0, self.col0)
    }

    pub fn contains(&self, r: usize, c: usize) -> bool {
        (self.row0..=self.row1).contains(&r) && (self.col0..=self.col1).contains(&c)
    }

    pub fn cell_count(&self) -> usize {
        (self.row1 - self.row0 + 1) * (self.col1 - self.col0 + 1)
    }

    fn overlaps(&self, o: &Component) -> bool {
        self.row0 <= o.row1 && o.row0 <= self.row1 && self.col0 <= o.col1 && o.col0 <= self.col1
    }

    fn union(&self, o: &Component) -> Component {
        Component {
            row0: self.row0.min(o.row0),
            col0: self.col0.min(o.col0),
            row1: self.row1.max(o.row1),
            col1: self.col1.max(o.col1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeResolution {
    pub rows: usize,
    pub cols: usize,
    /// Row-major, one entry per cell.
    pub occupancy: Vec<bool>,
    /// Row-major `rows × (cols-1)`.
    pub merge_right: Vec<bool>,
    /// Row-major `(rows-1) × cols`.
    pub merge_down: Vec<bool>,
    /// Sorted by anchor in reading order.
    pub components: Vec<Component>,
    /// Index into `components` for each cell, row-major.
    pub component_of: Vec<usize>,
    pub warnings: Vec<String>,
}

impl MergeResolution {
    pub fn occupied(&self, r: usize, c: usize) -> bool {
        self.occupancy[r * self.cols + c]
    }

    pub fn component_at(&self, r: usize, c: usize) -> &Component {
        &self.components[self.component_of[r * self.cols + c]]
    }

    /// A component holds data when any of its cells does.
    pub fn component_occupied(&self, comp: &Component) -> bool {
        (comp.row0..=comp.row1).any(|r| (comp.col0..=comp.col1).any(|c| self.occupied(r, c)))
    }
}

/// Merges cells from pair decisions and expands each connected group of
/// merged cells to its bounding rectangle.
pub fn resolve_merges(decisions: &PairDecisions, merge_threshold: f64) -> MergeResolution {
    let (rows, cols) = (decisions.rows, decisions.cols);
    let mut occupancy = vec![false; rows * cols];
    let mut merge_right = vec![false; rows * cols.saturating_sub(1)];
    let mut merge_down = vec![false; rows.saturating_sub(1) * cols];
    if let Some(d) = decisions.single {
        occupancy[0] = d.left_data >= 0.5 || d.right_data >= 0.5;
    }
    for r in 0..rows {
        for c in 0..cols.saturating_sub(1) {
            let d = decisions.right[r][c];
            occupancy[r * cols + c] |= d.left_data >= 0.5;
            occupancy[r * cols + c + 1] |= d.right_data >= 0.5;
            merge_right[r * (cols - 1) + c] = d.merge >= merge_threshold;
        }
    }
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols {
            let d = decisions.down[r][c];
            occupancy[r * cols + c] |= d.left_data >= 0.5;
            occupancy[(r + 1) * cols + c] |= d.right_data >= 0.5;
            merge_down[r * cols + c] = d.merge >= merge_threshold;
        }
    }
    let (components, component_of, warnings) = merge_components(rows, cols, &merge_right, &merge_down);
    for w in &warnings {
        log::warn!("{w}");
    }
    MergeResolution {
        rows,
        cols,
        occupancy,
        merge_right,
        merge_down,
        components,
        component_of,
        warnings,
    }
}

/// Connected components of the merge flags, rectangularised.
pub fn merge_components(
    rows: usize,
    cols: usize,
    merge_right: &[bool],
    merge_down: &[bool],
) -> (Vec<Component>, Vec<usize>, Vec<String>) {
    let n = rows * cols;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let join = |p: &mut Vec<usize>, a: usize, b: usize| {
        let (ra, rb) = (find(p, a), find(p, b));
        if ra != rb {
            p[ra.max(rb)] = ra.min(rb);
        }
    };
    for r in 0..rows {
        for c in 0..cols.saturating_sub(1) {
            if merge_right[r * (cols - 1) + c] {
                join(&mut parent, r * cols + c, r * cols + c + 1);
            }
        }
    }
    for r in 0..rows.saturating_sub(1) {
        for c in 0..cols {
            if merge_down[r * cols + c] {
                join(&mut parent, r * cols + c, (r + 1) * cols + c);
            }
        }
    }
    let mut boxes: std::collections::BTreeMap<usize, (Component, usize)> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        let (r, c) = (i / cols, i % cols);
        let cell = Component {
            row0: r,
            col0: c,
            row1: r,
            col1: c,
        };
        boxes
            .entry(root)
            .and_modify(|(b, k)| {
                *b = b.union(&cell);
                *k += 1;
            })
            .or_insert((cell, 1));
    }
    let mut warnings = Vec::new();
    let mut comps: Vec<Component> = Vec::new();
    for (b, k) in boxes.values() {
        if b.cell_count() != *k {
            warnings.push(format!(
                "merged cells rows {}..={} cols {}..={} were not rectangular; expanded to bounding box",
                b.row0, b.row1, b.col0, b.col1
            ));
        }
        comps.push(*b);
    }
    // bounding boxes may now overlap each other; fuse until disjoint
    loop {
        let mut fused = false;
        'outer: for i in 0..comps.len() {
            for j in i + 1..comps.len() {
                if comps[i].overlaps(&comps[j]) {
                    let u = comps[i].union(&comps[j]);
                    warnings.push(format!(
                        "merged regions {:?} and {:?} overlap after expansion; fused",
                        comps[i], comps[j]
                    ));
                    comps[i] = u;
                    comps.swap_remove(j);
                    fused = true;
                    break 'outer;
                }
            }
        }
        if !fused {
            break;
        }
    }
    comps.sort();
    let mut component_of = vec![0; n];
    for (k, comp) in comps.iter().enumerate() {
        for r in comp.row0..=comp.row1 {
            for c in comp.col0..=comp.col1 {
                component_of[r * cols + c] = k;
            }
        }
    }
    (comps, component_of, warnings)
}

/// A merged cell located in the original page image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellBox {
    pub component: Component,
    pub region: Region,
    pub occupied: bool,
}

/// Maps each component's crop box through `scale` (crop → original table
/// crop) and the table region's offset, clamping to the region.
pub fn scale_cells_to_original(
    resolution: &MergeResolution,
    grid: &CellGrid,
    scale: &ScaleMap,
    region: &Region,
) -> Vec<CellBox> {
    let clamp = |v: i64, lo: u32, hi: u32| v.clamp(lo as i64, hi as i64) as u32;
    resolution
        .components
        .iter()
        .map(|comp| {
            let x0 = grid.col_bounds[comp.col0] as f64 * scale.scale_x;
            let x1 = grid.col_bounds[comp.col1 + 1] as f64 * scale.scale_x;
            let y0 = grid.row_bounds[comp.row0] as f64 * scale.scale_y;
            let y1 = grid.row_bounds[comp.row1 + 1] as f64 * scale.scale_y;
            let ox = region.x_min as i64;
            let oy = region.y_min as i64;
            CellBox {
                component: *comp,
                region: Region::new(
                    clamp(round_half_up(x0) + ox, region.x_min, region.x_max),
                    clamp(round_half_up(y0) + oy, region.y_min, region.y_max),
                    clamp(round_half_up(x1) + ox, region.x_min, region.x_max),
                    clamp(round_half_up(y1) + oy, region.y_min, region.y_max),
                ),
                occupied: resolution.component_occupied(comp),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::line_detect::Orientation;

    fn lines(axis: Orientation, c: &[u32]) -> FinalLines {
        FinalLines {
            axis,
            coordinates: c.to_vec(),
        }
    }

    #[test]
    fn grid_shapes() {
        let g = build_grid(
            &lines(Orientation::Vertical, &[0, 100, 200]),
            &lines(Orientation::Horizontal, &[0, 50]),
        )
        .unwrap();
        assert_eq!((g.rows(), g.cols()), (1, 2));
        let g = build_grid(
            &lines(Orientation::Vertical, &[0, 99]),
            &lines(Orientation::Horizontal, &[0, 49]),
        )
        .unwrap();
        assert_eq!((g.rows(), g.cols()), (1, 1));
        assert!(build_grid(
            &lines(Orientation::Vertical, &[0]),
            &lines(Orientation::Horizontal, &[0, 4])
        )
        .is_err());
    }

    #[test]
    fn pair_view_is_fixed_size() {
        let crop = GrayImage::filled(120, 50, 255);
        for (cx, ry) in [(vec![0, 30, 119], vec![0, 10, 49]), (vec![0, 90, 119], vec![0, 40, 49])] {
            let g = CellGrid {
                row_bounds: ry,
                col_bounds: cx,
            };
            let v = prepare_pair(&crop, &g, (0, 0), (0, 1)).unwrap();
            assert_eq!((v.width(), v.height()), (200, 100));
            let v = prepare_pair(&crop, &g, (0, 0), (1, 0)).unwrap();
            assert_eq!((v.width(), v.height()), (200, 100));
        }
        let g = CellGrid {
            row_bounds: vec![0, 49],
            col_bounds: vec![0, 60, 119],
        };
        assert!(prepare_pair(&crop, &g, (0, 0), (0, 0)).is_ok());
        assert!(prepare_pair(&crop, &g, (0, 0), (1, 1)).is_err());
    }

    #[test]
    fn vertical_pair_puts_upper_cell_left() {
        // upper cell dark, lower cell white
        let crop = GrayImage::from_fn(40, 40, |_, y| if y < 20 { 0 } else { 255 });
        let g = CellGrid {
            row_bounds: vec![0, 20, 39],
            col_bounds: vec![0, 39],
        };
        let v = prepare_pair(&crop, &g, (0, 0), (1, 0)).unwrap();
        assert!(v.get(10, 50) < 128);
        assert!(v.get(190, 50) > 128);
    }

    #[test]
    fn ink_classifier_examples() {
        let white = GrayImage::filled(200, 100, 255);
        let d = default_merge_classifier(&white).unwrap();
        assert_eq!((d.left_data, d.right_data, d.merge), (0.0, 0.0, 0.0));

        let mut left = white.clone();
        left.fill_rect(20, 40, 60, 50, 0);
        let d = default_merge_classifier(&left).unwrap();
        assert_eq!((d.left_data, d.right_data, d.merge), (1.0, 0.0, 0.0));

        let mut across = white.clone();
        across.fill_rect(60, 40, 140, 50, 0);
        let d = default_merge_classifier(&across).unwrap();
        assert_eq!((d.left_data, d.right_data, d.merge), (1.0, 1.0, 1.0));

        assert!(default_merge_classifier(&GrayImage::filled(100, 100, 255)).is_err());
    }

    fn flags(rows: usize, cols: usize, right: &[(usize, usize)], down: &[(usize, usize)]) -> PairDecisions {
        let dec = |m: bool| PairDecision {
            left_data: 1.0,
            right_data: 1.0,
            merge: if m { 1.0 } else { 0.0 },
        };
        PairDecisions {
            rows,
            cols,
            right: (0..rows)
                .map(|r| (0..cols - 1).map(|c| dec(right.contains(&(r, c)))).collect())
                .collect(),
            down: (0..rows - 1)
                .map(|r| (0..cols).map(|c| dec(down.contains(&(r, c)))).collect())
                .collect(),
            single: None,
        }
    }

    #[test]
    fn resolve_examples() {
        let r = resolve_merges(&flags(2, 3, &[], &[]), 0.5);
        assert_eq!(r.components.len(), 6);

        let r = resolve_merges(&flags(2, 3, &[(0, 0), (0, 1)], &[]), 0.5);
        assert_eq!(r.components.len(), 4);
        assert_eq!(
            r.components[0],
            Component {
                row0: 0,
                col0: 0,
                row1: 0,
                col1: 2
            }
        );

        let r = resolve_merges(&flags(2, 2, &[(0, 0)], &[(0, 0)]), 0.5);
        assert_eq!(r.components.len(), 1);
        assert_eq!(r.components[0].cell_count(), 4);
        assert!(!r.warnings.is_empty());
    }

    #[test]
    fn scaling_example() {
        let grid = CellGrid {
            row_bounds: vec![30, 40],
            col_bounds: vec![10, 20],
        };
        let single = PairDecisions {
            rows: 1,
            cols: 1,
            right: vec![vec![]],
            down: vec![],
            single: Some(PairDecision {
                left_data: 1.0,
                right_data: 1.0,
                merge: 0.0,
            }),
        };
        let res = resolve_merges(&single, 0.5);
        let region = Region::new(100, 50, 1000, 1000);
        let boxes = scale_cells_to_original(&res, &grid, &ScaleMap::uniform(2.0), &region);
        assert_eq!(boxes[0].region, Region::new(120, 110, 140, 130));
        assert!(boxes[0].occupied);

        let small = Region::new(100, 50, 125, 1000);
        let boxes = scale_cells_to_original(&res, &grid, &ScaleMap::uniform(2.0), &small);
        assert_eq!(boxes[0].region.x_max, 125);
    }
}
