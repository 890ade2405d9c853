//! Brute-force oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};
use std::path::Path;

use rand::Rng;

use tabscan::cell_grid::Component;
use tabscan::evaluation::relations::{normalize_text, AdjacencyRelation, RelationDirection};
use tabscan::line_detect::GradientField;
use tabscan::ocr_output::{Direction, TableCell, TableModel};
use tabscan::Region;

/// Same count and each detected coordinate within `tol` of its drawn one.
pub fn lines_match(got: &[u32], want: &[u32], tol: u32) -> bool {
    got.len() == want.len() && got.iter().zip(want).all(|(g, w)| g.abs_diff(*w) <= tol)
}

fn runs(valid: &[bool]) -> usize {
    valid.split(|v| !v).filter(|seg| !seg.is_empty()).count()
}

/// Evaluates every threshold up front, then picks the last one before the
/// first drop below the running maximum.
pub fn threshold_sweep_oracle(scores: &[f64], t0: f64, delta: f64) -> (Vec<bool>, f64, usize) {
    let ts: Vec<f64> = (0..)
        .map(|k| t0 + k as f64 * delta)
        .take_while(|&t| t <= 1.0 + 1e-9)
        .collect();
    let sets: Vec<Vec<bool>> = ts
        .iter()
        .map(|&t| scores.iter().map(|&s| s >= t - 1e-9).collect())
        .collect();
    let counts: Vec<usize> = sets.iter().map(|v| runs(v)).collect();
    let mut pick = ts.len() - 1;
    for k in 1..ts.len() {
        let best = *counts[..k].iter().max().unwrap();
        if counts[k] < best {
            pick = k - 1;
            break;
        }
    }
    (sets[pick].clone(), ts[pick], counts[pick])
}

pub fn sma_window_oracle(scores: &[f64], valid: &[bool], a: usize, b: usize, c: usize) -> f64 {
    let lo = c.saturating_sub(2).max(a);
    let hi = (c + 2).min(b);
    (lo..=hi).filter(|&k| valid[k]).map(|k| scores[k]).sum::<f64>() / 5.0
}

pub fn sma_oracle(scores: &[f64], valid: &[bool], a: usize, b: usize) -> usize {
    let vals: Vec<(usize, f64)> = (a..=b)
        .map(|c| (c, sma_window_oracle(scores, valid, a, b, c)))
        .collect();
    let m = vals.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    vals.iter()
        .filter(|v| v.1 >= m - 1e-9)
        .min_by_key(|v| ((2 * v.0).abs_diff(a + b), v.0))
        .unwrap()
        .0
}

pub fn maxpool_oracle(f: &GradientField) -> GradientField {
    let (w, h) = (f.width as i64, f.height as i64);
    let pool = |src: &[u16]| {
        let mut out = Vec::with_capacity(src.len());
        for y in 0..h {
            for x in 0..w {
                let mut m = 0u16;
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let xx = (x + dx).clamp(0, w - 1);
                        let yy = (y + dy).clamp(0, h - 1);
                        m = m.max(src[(yy * w + xx) as usize]);
                    }
                }
                out.push(m);
            }
        }
        out
    };
    GradientField {
        width: f.width,
        height: f.height,
        d2x: pool(&f.d2x),
        d2y: pool(&f.d2y),
    }
}

/// Breadth-first components of the merge flags, expanded to bounding
/// rectangles and fused until no two overlap.
pub fn merge_oracle(rows: usize, cols: usize, right: &[bool], down: &[bool]) -> Vec<Component> {
    let mut seen = vec![false; rows * cols];
    let mut boxes = Vec::new();
    for start in 0..rows * cols {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        let mut b = Component {
            row0: usize::MAX,
            col0: usize::MAX,
            row1: 0,
            col1: 0,
        };
        while let Some(i) = q.pop_front() {
            let (r, c) = (i / cols, i % cols);
            b.row0 = b.row0.min(r);
            b.col0 = b.col0.min(c);
            b.row1 = b.row1.max(r);
            b.col1 = b.col1.max(c);
            let mut nbrs = Vec::new();
            if c + 1 < cols && right[r * (cols - 1) + c] {
                nbrs.push(i + 1);
            }
            if c > 0 && right[r * (cols - 1) + c - 1] {
                nbrs.push(i - 1);
            }
            if r + 1 < rows && down[r * cols + c] {
                nbrs.push(i + cols);
            }
            if r > 0 && down[(r - 1) * cols + c] {
                nbrs.push(i - cols);
            }
            for n in nbrs {
                if !seen[n] {
                    seen[n] = true;
                    q.push_back(n);
                }
            }
        }
        boxes.push(b);
    }
    let overlap =
        |a: &Component, b: &Component| a.row0 <= b.row1 && b.row0 <= a.row1 && a.col0 <= b.col1 && b.col0 <= a.col1;
    'restart: loop {
        for i in 0..boxes.len() {
            for j in 0..boxes.len() {
                if i != j && overlap(&boxes[i], &boxes[j]) {
                    let (a, b) = (boxes[i], boxes[j]);
                    boxes.retain(|x| *x != a && *x != b);
                    boxes.push(Component {
                        row0: a.row0.min(b.row0),
                        col0: a.col0.min(b.col0),
                        row1: a.row1.max(b.row1),
                        col1: a.col1.max(b.col1),
                    });
                    continue 'restart;
                }
            }
        }
        break;
    }
    boxes.sort();
    boxes
}

/// Random table model with rectangular merges, empty cells and repeated
/// texts.
pub fn random_model(rng: &mut impl Rng, max_rows: usize, max_cols: usize) -> TableModel {
    let rows = rng.random_range(1..=max_rows);
    let cols = rng.random_range(1..=max_cols);
    let mut m = TableModel::new(rows, cols);
    let mut taken = vec![false; rows * cols];
    const WORDS: &[&str] = &["a", "b", "c", "d", "Ab", "x  y", ""];
    for r in 0..rows {
        for c in 0..cols {
            if taken[r * cols + c] {
                continue;
            }
            let mut h = 1;
            let mut w = 1;
            if rng.random_bool(0.3) {
                h = rng.random_range(1..=rows - r);
                w = rng.random_range(1..=cols - c);
                let free = (r..r + h).all(|rr| (c..c + w).all(|cc| !taken[rr * cols + cc]));
                if !free {
                    h = 1;
                    w = 1;
                }
            }
            for rr in r..r + h {
                for cc in c..c + w {
                    taken[rr * cols + cc] = true;
                    let cell = if (rr, cc) == (r, c) {
                        if rng.random_bool(0.25) {
                            TableCell::Empty
                        } else {
                            TableCell::Text(WORDS[rng.random_range(0..WORDS.len())].to_string())
                        }
                    } else if rr == r {
                        TableCell::Extend(Direction::Left)
                    } else {
                        TableCell::Extend(Direction::Up)
                    };
                    m.set(rr, cc, cell);
                }
            }
        }
    }
    m
}

/// Pairwise scan: for every two filled logical cells, checks whether one is
/// the first filled cell the other meets going right (or down) along some
/// shared row (column).
pub fn adjacency_oracle(m: &TableModel) -> Vec<AdjacencyRelation> {
    let anchor = |mut r: usize, mut c: usize| loop {
        match m.get(r, c) {
            TableCell::Extend(Direction::Left) => c -= 1,
            TableCell::Extend(Direction::Up) => r -= 1,
            _ => return (r, c),
        }
    };
    let owner: Vec<(usize, usize)> = (0..m.rows * m.cols).map(|i| anchor(i / m.cols, i % m.cols)).collect();
    let text_of = |a: (usize, usize)| match m.get(a.0, a.1) {
        TableCell::Text(t) => normalize_text(t),
        _ => String::new(),
    };
    let mut cells: BTreeMap<(usize, usize), (usize, usize, usize, usize)> = BTreeMap::new();
    for (i, &a) in owner.iter().enumerate() {
        let (r, c) = (i / m.cols, i % m.cols);
        let e = cells.entry(a).or_insert((r, c, r, c));
        e.0 = e.0.min(r);
        e.1 = e.1.min(c);
        e.2 = e.2.max(r);
        e.3 = e.3.max(c);
    }
    let filled = |a: (usize, usize)| !text_of(a).is_empty();
    let mut out = Vec::new();
    for (&a, ea) in &cells {
        for (&b, eb) in &cells {
            if a == b || !filled(a) || !filled(b) {
                continue;
            }
            let horizontal = eb.1 > ea.3
                && (ea.0.max(eb.0)..=ea.2.min(eb.2)).any(|r| (ea.3 + 1..eb.1).all(|c| !filled(owner[r * m.cols + c])));
            if horizontal {
                out.push(AdjacencyRelation::new(
                    text_of(a),
                    text_of(b),
                    RelationDirection::Horizontal,
                ));
            }
            let vertical = eb.0 > ea.2
                && (ea.1.max(eb.1)..=ea.3.min(eb.3)).any(|c| (ea.2 + 1..eb.0).all(|r| !filled(owner[r * m.cols + c])));
            if vertical {
                out.push(AdjacencyRelation::new(
                    text_of(a),
                    text_of(b),
                    RelationDirection::Vertical,
                ));
            }
        }
    }
    out
}

pub fn random_regions(rng: &mut impl Rng, max_n: usize, size: u32) -> Vec<Region> {
    let n = rng.random_range(0..=max_n);
    (0..n)
        .map(|_| {
            let x0 = rng.random_range(0..size);
            let y0 = rng.random_range(0..size);
            let x1 = rng.random_range(x0..size.min(x0 + size / 2));
            let y1 = rng.random_range(y0..size.min(y0 + size / 2));
            Region::new(x0, y0, x1, y1)
        })
        .collect()
}

/// Precision and recall by painting both region sets on a `size`×`size`
/// raster.
pub fn area_pixel_oracle(pred: &[Region], truth: &[Region], size: u32) -> (f64, f64) {
    let paint = |rs: &[Region]| {
        let mut g = vec![false; (size * size) as usize];
        for r in rs {
            for y in r.y_min..=r.y_max {
                for x in r.x_min..=r.x_max {
                    g[(y * size + x) as usize] = true;
                }
            }
        }
        g
    };
    let (p, t) = (paint(pred), paint(truth));
    let ap = p.iter().filter(|&&v| v).count() as f64;
    let al = t.iter().filter(|&&v| v).count() as f64;
    let both = p.iter().zip(&t).filter(|(a, b)| **a && **b).count() as f64;
    let precision = if ap > 0.0 {
        both / ap
    } else if al > 0.0 {
        0.0
    } else {
        1.0
    };
    let recall = if al > 0.0 { both / al } else { 1.0 };
    (precision, recall)
}

/// Replaces the first overlapping pair by its bounding box and starts over
/// until nothing overlaps.
pub fn ensemble_oracle(a: &[Region], b: &[Region]) -> Vec<Region> {
    let mut v: Vec<Region> = a.iter().chain(b).copied().collect();
    'restart: loop {
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                if v[i].overlaps(&v[j]) {
                    let u = v[i].union(&v[j]);
                    v.remove(j);
                    v[i] = u;
                    continue 'restart;
                }
            }
        }
        break;
    }
    v.sort();
    v.dedup();
    v
}

/// Every file under `dir`, keyed by relative path.
pub fn read_dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}
