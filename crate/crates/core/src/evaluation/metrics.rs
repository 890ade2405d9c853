//! Area-based precision and recall for table location.

use serde::{Deserialize, Serialize};

use crate::region_detect::Region;

/// Precision, recall and their harmonic mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Scores {
    pub fn new(precision: f64, recall: f64) -> Self {
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        Self { precision, recall, f1 }
    }

    /// Precision `matched/predicted` and recall `matched/truth`. An empty
    /// prediction has precision 1 only when the truth is empty too; an empty
    /// truth has recall 1.
    pub fn from_counts(matched: f64, predicted: f64, truth: f64) -> Self {
        let precision = if predicted > 0.0 {
            matched / predicted
        } else if truth > 0.0 {
            0.0
        } else {
            1.0
        };
        let recall = if truth > 0.0 { matched / truth } else { 1.0 };
        Self::new(precision, recall)
    }
}

pub type AreaMetrics = Scores;

/// Half-open `[x0, x1) × [y0, y1)` form of an inclusive region.
fn half_open(r: &Region) -> (u64, u64, u64, u64) {
    (r.x_min as u64, r.y_min as u64, r.x_max as u64 + 1, r.y_max as u64 + 1)
}

/// Areas of `∪a`, `∪b` and `(∪a) ∩ (∪b)` by coordinate compression.
pub fn union_areas(a: &[Region], b: &[Region]) -> (u64, u64, u64) {
    let ra: Vec<_> = a.iter().map(half_open).collect();
    let rb: Vec<_> = b.iter().map(half_open).collect();
    let mut xs: Vec<u64> = ra.iter().chain(&rb).flat_map(|r| [r.0, r.2]).collect();
    let mut ys: Vec<u64> = ra.iter().chain(&rb).flat_map(|r| [r.1, r.3]).collect();
    xs.sort_unstable();
    xs.dedup();
    ys.sort_unstable();
    ys.dedup();
    let covers =
        |set: &[(u64, u64, u64, u64)], x: u64, y: u64| set.iter().any(|r| r.0 <= x && x < r.2 && r.1 <= y && y < r.3);
    let (mut area_a, mut area_b, mut both) = (0, 0, 0);
    for xi in xs.windows(2) {
        for yi in ys.windows(2) {
            let cell = (xi[1] - xi[0]) * (yi[1] - yi[0]);
            let in_a = covers(&ra, xi[0], yi[0]);
            let in_b = covers(&rb, xi[0], yi[0]);
            if in_a {
                area_a += cell;
            }
            if in_b {
                area_b += cell;
            }
            if in_a && in_b {
                both += cell;
            }
        }
    }
    (area_a, area_b, both)
}

/// Precision `|AP ∩ AL| / |AP|` and recall `|AP ∩ AL| / |AL|`, where `AP`
/// and `AL` are the union areas of predicted and true regions.
pub fn area_precision_recall(predicted: &[Region], truth: &[Region]) -> AreaMetrics {
    let (ap, al, both) = union_areas(predicted, truth);
    Scores::from_counts(both as f64, ap as f64, al as f64)
}
