//! Inferred lines from the data mask and their fusion with real lines into
//! the final structural grid.
//!
//! For each axis the flow is: [`quality_profile`] → [`adaptive_inferred_lines`]
//! → [`group_inferred`] → [`suppress_near_real`] → [`sma_select`] per group →
//! [`finalize_lines`]. [`structure_axis`] chains them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::line_detect::{DataMask, Orientation, RealLine};

/// Tolerance used when comparing scores against thresholds and SMA values
/// against each other.
const EPS: f64 = 1e-9;

/// Fraction of each candidate line's span that is free of data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityProfile {
    pub axis: Orientation,
    pub scores: Vec<f64>,
}

/// For the vertical axis `scores[x]` is the share of rows `y` with no data
/// at `(x, y)`; the horizontal axis is the transpose.
pub fn quality_profile(mask: &DataMask, axis: Orientation) -> QualityProfile {
    let (w, h) = (mask.width, mask.height);
    let scores = match axis {
        Orientation::Vertical => (0..w)
            .map(|x| (0..h).filter(|&y| !mask.get(x, y)).count() as f64 / h as f64)
            .collect(),
        Orientation::Horizontal => (0..h)
            .map(|y| (0..w).filter(|&x| !mask.get(x, y)).count() as f64 / w as f64)
            .collect(),
    };
    QualityProfile { axis, scores }
}

/// Number of maximal runs of `true`.
pub fn count_groups(valid: &[bool]) -> usize {
    valid
        .iter()
        .enumerate()
        .filter(|&(i, &v)| v && (i == 0 || !valid[i - 1]))
        .count()
}

/// Candidate lines valid at the accepted threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferredLineSet {
    pub axis: Orientation,
    pub valid: Vec<bool>,
    pub threshold_final: f64,
    pub group_count: usize,
    /// Group count at the starting threshold.
    pub initial_group_count: usize,
    /// Thresholds evaluated, including the one that ended the search.
    pub iterations: usize,
}

/// Adaptive threshold search.
///
/// Starting at `t0`, lines with `score ≥ t` are valid. While the number of
/// valid groups does not drop below the best seen so far, the current valid
/// set is kept and `t` grows by `delta`. The search also stops once `t`
/// exceeds 1.
pub fn adaptive_inferred_lines(profile: &QualityProfile, t0: f64, delta: f64) -> Result<InferredLineSet> {
    if !(t0 > 0.0 && t0 < 1.0) {
        return Err(Error::Config(format!("threshold start must be in (0,1), got {t0}")));
    }
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(Error::Config(format!("delta must be in (0,0.1], got {delta}")));
    }
    let mut best = 0usize;
    let mut kept: Option<(Vec<bool>, f64)> = None;
    let mut initial = 0usize;
    let mut iterations = 0usize;
    let mut k = 0u32;
    loop {
        let t = t0 + k as f64 * delta;
        if t > 1.0 + EPS {
            break;
        }
        iterations += 1;
        let valid: Vec<bool> = profile.scores.iter().map(|&s| s >= t - EPS).collect();
        let groups = count_groups(&valid);
        if k == 0 {
            initial = groups;
        }
        if groups < best {
            break;
        }
        best = groups;
        kept = Some((valid, t));
        k += 1;
    }
    let (valid, threshold_final) = kept.expect("first threshold is always accepted");
    Ok(InferredLineSet {
        axis: profile.axis,
        valid,
        threshold_final,
        group_count: best,
        initial_group_count: initial,
        iterations,
    })
}

/// Inclusive interval of candidate coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferredGroup {
    pub start: usize,
    pub end: usize,
}

impl InferredGroup {
    fn distance_to(&self, band: (u32, u32)) -> usize {
        let (a, b) = (band.0 as usize, band.1 as usize);
        a.saturating_sub(self.end).max(self.start.saturating_sub(b))
    }
}

/// Maximal runs of valid coordinates; runs separated by at most `join_gap`
/// invalid coordinates are joined.
pub fn group_inferred(lines: &InferredLineSet, join_gap: usize) -> Vec<InferredGroup> {
    crate::region_detect::group_runs(&lines.valid, join_gap)
        .into_iter()
        .map(|(start, end)| InferredGroup { start, end })
        .collect()
}

/// Drops groups that contain a real line or lie within `proximity` pixels of
/// one.
pub fn suppress_near_real(groups: &[InferredGroup], real: &[RealLine], proximity: usize) -> Vec<InferredGroup> {
    groups
        .iter()
        .filter(|g| real.iter().all(|l| g.distance_to(l.band) > proximity))
        .copied()
        .collect()
}

/// Drops groups within `proximity` of the table edges, which are implicit
/// lines already.
pub fn suppress_near_borders(groups: &[InferredGroup], span: usize, proximity: usize) -> Vec<InferredGroup> {
    let last = span.saturating_sub(1) as u32;
    groups
        .iter()
        .filter(|g| g.distance_to((0, 0)) > proximity && g.distance_to((last, last)) > proximity)
        .copied()
        .collect()
}

/// Simple moving average over `[c-2, c+2]`; positions outside the group or
/// not valid contribute zero.
pub fn sma_at(c: usize, group: &InferredGroup, profile: &QualityProfile, valid: &[bool]) -> f64 {
    let mut sum = 0.0;
    for k in c as i64 - 2..=c as i64 + 2 {
        if k < group.start as i64 || k > group.end as i64 {
            continue;
        }
        let k = k as usize;
        if valid[k] {
            sum += profile.scores[k];
        }
    }
    sum / 5.0
}

/// Coordinate of the maximum SMA inside the group. Ties go to the position
/// closest to the group's midpoint, then to the smaller coordinate.
pub fn sma_select(group: &InferredGroup, profile: &QualityProfile, valid: &[bool]) -> usize {
    let mid2 = group.start + group.end;
    let mut best = group.start;
    let mut best_val = f64::NEG_INFINITY;
    for c in group.start..=group.end {
        let v = sma_at(c, group, profile, valid);
        let better = v > best_val + EPS || (v >= best_val - EPS && (2 * c).abs_diff(mid2) < (2 * best).abs_diff(mid2));
        if better {
            best = c;
            best_val = best_val.max(v);
        }
    }
    best
}

/// Sorted structural line coordinates including both borders.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalLines {
    pub axis: Orientation,
    pub coordinates: Vec<u32>,
}

/// Merges real and selected inferred coordinates with the borders `0` and
/// `span-1`. A coordinate closer than `min_cell` to one already kept is
/// dropped; borders are kept first, then real lines, then inferred ones, each
/// class in increasing order.
pub fn finalize_lines(
    real: &[u32],
    inferred: &[u32],
    axis: Orientation,
    span: u32,
    min_cell: u32,
) -> Result<FinalLines> {
    if span < 2 {
        return Err(Error::DegenerateTable(format!("span {span} is too small for a cell")));
    }
    let mut kept = vec![0, span - 1];
    let mut rest: Vec<u32> = real.iter().copied().filter(|&c| c < span).collect();
    rest.sort_unstable();
    let mut inf: Vec<u32> = inferred.iter().copied().filter(|&c| c < span).collect();
    inf.sort_unstable();
    rest.extend(inf);
    for c in rest {
        if kept.iter().all(|&k| k.abs_diff(c) >= min_cell) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    Ok(FinalLines {
        axis,
        coordinates: kept,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureConfig {
    pub threshold_start: f64,
    pub delta: f64,
    pub join_gap: usize,
    pub proximity: usize,
    pub min_cell: u32,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            threshold_start: 0.6,
            delta: 0.02,
            join_gap: 2,
            proximity: 5,
            min_cell: 8,
        }
    }
}

/// Every intermediate of one axis, kept for debugging output.
#[derive(Debug, Clone)]
pub struct AxisStructure {
    pub profile: QualityProfile,
    pub inferred: InferredLineSet,
    pub groups: Vec<InferredGroup>,
    pub kept_groups: Vec<InferredGroup>,
    pub selected: Vec<u32>,
    pub final_lines: FinalLines,
}

/// Runs the threshold search as if a data-free line lay just outside each
/// table edge.
///
/// Crops are tight around the ink, so the ragged end of the last column or
/// row forms a valid group touching the edge. Without the virtual edge
/// lines that group vanishes once the threshold passes its best score and
/// ends the search early, before sparse columns elsewhere have split off.
/// Group counts in the result include the edge groups.
pub fn adaptive_with_open_edges(profile: &QualityProfile, t0: f64, delta: f64) -> Result<InferredLineSet> {
    let mut scores = Vec::with_capacity(profile.scores.len() + 2);
    scores.push(1.0);
    scores.extend_from_slice(&profile.scores);
    scores.push(1.0);
    let extended = QualityProfile {
        axis: profile.axis,
        scores,
    };
    let mut set = adaptive_inferred_lines(&extended, t0, delta)?;
    set.valid.pop();
    set.valid.remove(0);
    Ok(set)
}

pub fn structure_axis(
    mask: &DataMask,
    real: &[RealLine],
    axis: Orientation,
    cfg: &StructureConfig,
) -> Result<AxisStructure> {
    let span = match axis {
        Orientation::Vertical => mask.width,
        Orientation::Horizontal => mask.height,
    };
    let real: Vec<RealLine> = real.iter().filter(|l| l.orientation == axis).copied().collect();
    let profile = quality_profile(mask, axis);
    let inferred = adaptive_with_open_edges(&profile, cfg.threshold_start, cfg.delta)?;
    let groups = group_inferred(&inferred, cfg.join_gap);
    let kept_groups = suppress_near_borders(
        &suppress_near_real(&groups, &real, cfg.proximity),
        span as usize,
        cfg.proximity,
    );
    let selected: Vec<u32> = kept_groups
        .iter()
        .map(|g| sma_select(g, &profile, &inferred.valid) as u32)
        .collect();
    let real_coords: Vec<u32> = real.iter().map(|l| l.coordinate).collect();
    let final_lines = finalize_lines(&real_coords, &selected, axis, span, cfg.min_cell)?;
    Ok(AxisStructure {
        profile,
        inferred,
        groups,
        kept_groups,
        selected,
        final_lines,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(scores: &[f64]) -> QualityProfile {
        QualityProfile {
            axis: Orientation::Vertical,
            scores: scores.to_vec(),
        }
    }

    fn real_at(c: u32) -> RealLine {
        RealLine {
            orientation: Orientation::Vertical,
            coordinate: c,
            band: (c, c),
            source_span: (0, 9),
            extent: (0, 9),
        }
    }

    #[test]
    fn profile_counts() {
        let empty = DataMask::from_fn(4, 10, |_, _| false);
        assert!(quality_profile(&empty, Orientation::Vertical)
            .scores
            .iter()
            .all(|&s| s == 1.0));
        let full = DataMask::from_fn(4, 10, |x, _| x == 1);
        assert_eq!(quality_profile(&full, Orientation::Vertical).scores[1], 0.0);
        let three = DataMask::from_fn(4, 10, |x, y| x == 2 && y < 3);
        assert!((quality_profile(&three, Orientation::Vertical).scores[2] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn threshold_search_example() {
        let p = prof(&[1.0, 1.0, 0.2, 0.1, 1.0, 1.0, 0.5, 0.3, 1.0, 1.0]);
        let r = adaptive_inferred_lines(&p, 0.6, 0.05).unwrap();
        let valid: Vec<usize> = (0..10).filter(|&i| r.valid[i]).collect();
        assert_eq!(valid, vec![0, 1, 4, 5, 8, 9]);
        assert_eq!(r.group_count, 3);
        assert!((r.threshold_final - 1.0).abs() < 1e-9);
        assert_eq!(r.iterations, 9);
    }

    #[test]
    fn threshold_search_all_ones() {
        let r = adaptive_inferred_lines(&prof(&[1.0; 12]), 0.6, 0.02).unwrap();
        assert_eq!(r.group_count, 1);
        assert!(r.valid.iter().all(|&v| v));
    }

    #[test]
    fn threshold_search_stops_on_drop() {
        // group at index 4 vanishes once t passes 0.7
        let p = prof(&[0.0, 1.0, 0.0, 0.0, 0.7, 0.0, 1.0]);
        let r = adaptive_inferred_lines(&p, 0.6, 0.05).unwrap();
        assert_eq!(r.group_count, 3);
        assert!(r.valid[4]);
        assert!((r.threshold_final - 0.7).abs() < 1e-9);
    }

    #[test]
    fn threshold_search_rejects_bad_parameters() {
        let p = prof(&[1.0]);
        assert!(adaptive_inferred_lines(&p, 0.0, 0.05).is_err());
        assert!(adaptive_inferred_lines(&p, 0.6, 0.2).is_err());
        assert!(adaptive_inferred_lines(&p, 0.6, 0.0).is_err());
    }

    #[test]
    fn grouping_examples() {
        let mk = |v: &[usize]| InferredLineSet {
            axis: Orientation::Vertical,
            valid: (0..8).map(|i| v.contains(&i)).collect(),
            threshold_final: 0.6,
            group_count: 0,
            initial_group_count: 0,
            iterations: 1,
        };
        assert_eq!(
            group_inferred(&mk(&[0, 1, 4, 5]), 1),
            vec![InferredGroup { start: 0, end: 1 }, InferredGroup { start: 4, end: 5 }]
        );
        assert_eq!(
            group_inferred(&mk(&[0, 1, 3, 4]), 1),
            vec![InferredGroup { start: 0, end: 4 }]
        );
        assert!(group_inferred(&mk(&[]), 1).is_empty());
    }

    #[test]
    fn suppression_examples() {
        let g = [InferredGroup { start: 10, end: 20 }];
        assert!(suppress_near_real(&g, &[real_at(15)], 5).is_empty());
        assert!(suppress_near_real(&g, &[real_at(24)], 5).is_empty());
        assert_eq!(suppress_near_real(&g, &[real_at(40)], 5), g.to_vec());
    }

    #[test]
    fn sma_examples() {
        let mut scores = vec![0.0; 12];
        scores[7] = 1.0;
        let p = prof(&scores);
        let valid: Vec<bool> = (0..12).map(|i| i == 7).collect();
        let g = InferredGroup { start: 7, end: 7 };
        assert!((sma_at(7, &g, &p, &valid) - 0.2).abs() < 1e-12);
        assert_eq!(sma_select(&g, &p, &valid), 7);

        let mut scores = vec![0.0; 12];
        scores[4..9].copy_from_slice(&[0.8, 0.9, 1.0, 0.9, 0.8]);
        let p = prof(&scores);
        let valid: Vec<bool> = (0..12).map(|i| (4..=8).contains(&i)).collect();
        let g = InferredGroup { start: 4, end: 8 };
        assert!((sma_at(6, &g, &p, &valid) - 0.88).abs() < 1e-12);
        assert!(sma_at(6, &g, &p, &valid) > sma_at(5, &g, &p, &valid));
        assert_eq!(sma_select(&g, &p, &valid), 6);

        let mut scores = vec![0.0; 10];
        scores[4..7].copy_from_slice(&[1.0, 1.0, 1.0]);
        let p = prof(&scores);
        let valid: Vec<bool> = (0..10).map(|i| (4..=6).contains(&i)).collect();
        assert_eq!(sma_select(&InferredGroup { start: 4, end: 6 }, &p, &valid), 5);
    }

    #[test]
    fn finalize_examples() {
        let f = finalize_lines(&[100], &[200], Orientation::Vertical, 400, 8).unwrap();
        assert_eq!(f.coordinates, vec![0, 100, 200, 399]);
        let f = finalize_lines(&[100], &[102], Orientation::Vertical, 400, 5).unwrap();
        assert_eq!(f.coordinates, vec![0, 100, 399]);
        let f = finalize_lines(&[], &[], Orientation::Vertical, 400, 8).unwrap();
        assert_eq!(f.coordinates, vec![0, 399]);
        assert!(finalize_lines(&[], &[], Orientation::Vertical, 1, 8).is_err());
    }
}
