//! Adjacency relations between neighbouring non-empty cells and the
//! per-document scores built on them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::groundtruth::GroundTruthTable;
use super::metrics::Scores;
use crate::ocr_output::{TableCell, TableModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RelationDirection {
    Horizontal,
    Vertical,
}

/// Texts of two neighbouring cells; `content_a <= content_b`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AdjacencyRelation {
    pub content_a: String,
    pub content_b: String,
    pub direction: RelationDirection,
}

impl AdjacencyRelation {
    pub fn new(a: String, b: String, direction: RelationDirection) -> Self {
        let (content_a, content_b) = if a <= b { (a, b) } else { (b, a) };
        Self {
            content_a,
            content_b,
            direction,
        }
    }
}

/// A cell after merging, in grid coordinates (inclusive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogicalCell {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
    pub text: String,
}

/// Lower-cases, collapses whitespace runs to one space and drops spaces next
/// to punctuation.
pub fn normalize_text(s: &str) -> String {
    let lower = s.to_lowercase();
    let words: Vec<&str> = lower.split_whitespace().collect();
    let mut out = String::new();
    for (i, w) in words.iter().enumerate() {
        if i > 0 {
            let prev = out.chars().last().unwrap_or(' ');
            let next = w.chars().next().unwrap_or(' ');
            if !prev.is_ascii_punctuation() && !next.is_ascii_punctuation() {
                out.push(' ');
            }
        }
        out.push_str(w);
    }
    out
}

/// Logical cells of a predicted table. Every non-`Extend` cell is an anchor
/// and owns the cells whose pointers lead to it; empty text counts as empty.
pub fn logical_cells_from_model(model: &TableModel) -> (usize, usize, Vec<LogicalCell>) {
    let mut by_anchor: BTreeMap<(usize, usize), LogicalCell> = BTreeMap::new();
    for r in 0..model.rows {
        for c in 0..model.cols {
            let (ar, ac) = model.anchor_of(r, c);
            let text = match model.get(ar, ac) {
                TableCell::Text(t) => t.clone(),
                _ => String::new(),
            };
            let e = by_anchor.entry((ar, ac)).or_insert(LogicalCell {
                row0: r,
                col0: c,
                row1: r,
                col1: c,
                text,
            });
            e.row0 = e.row0.min(r);
            e.col0 = e.col0.min(c);
            e.row1 = e.row1.max(r);
            e.col1 = e.col1.max(c);
        }
    }
    (model.rows, model.cols, by_anchor.into_values().collect())
}

pub fn logical_cells_from_truth(table: &GroundTruthTable) -> (usize, usize, Vec<LogicalCell>) {
    let cells = table
        .cells
        .iter()
        .map(|c| LogicalCell {
            row0: c.row,
            col0: c.col,
            row1: c.row + c.row_span - 1,
            col1: c.col + c.col_span - 1,
            text: c.text.clone(),
        })
        .collect();
    (table.rows(), table.cols(), cells)
}

/// Relations of a table given as logical cells.
///
/// For each non-empty cell, and for each row it spans, the nearest
/// non-empty cell further right forms a horizontal relation; likewise the
/// nearest non-empty cell below in each spanned column forms a vertical
/// one. A neighbour reached from several rows or columns counts once.
pub fn relations_of_cells(rows: usize, cols: usize, cells: &[LogicalCell], normalize: bool) -> Vec<AdjacencyRelation> {
    let norm = |s: &str| {
        if normalize {
            normalize_text(s)
        } else {
            s.trim().to_owned()
        }
    };
    let texts: Vec<String> = cells.iter().map(|c| norm(&c.text)).collect();
    let mut owner = vec![usize::MAX; rows * cols];
    for (k, c) in cells.iter().enumerate() {
        for r in c.row0..=c.row1.min(rows.saturating_sub(1)) {
            for cc in c.col0..=c.col1.min(cols.saturating_sub(1)) {
                owner[r * cols + cc] = k;
            }
        }
    }
    let filled = |k: usize| k != usize::MAX && !texts[k].is_empty();
    let mut out = Vec::new();
    for (k, cell) in cells.iter().enumerate() {
        if !filled(k) {
            continue;
        }
        let mut right: Vec<usize> = Vec::new();
        for r in cell.row0..=cell.row1 {
            if let Some(n) = (cell.col1 + 1..cols)
                .map(|c| owner[r * cols + c])
                .find(|&o| o != k && filled(o))
            {
                if !right.contains(&n) {
                    right.push(n);
                }
            }
        }
        let mut below: Vec<usize> = Vec::new();
        for c in cell.col0..=cell.col1 {
            if let Some(n) = (cell.row1 + 1..rows)
                .map(|r| owner[r * cols + c])
                .find(|&o| o != k && filled(o))
            {
                if !below.contains(&n) {
                    below.push(n);
                }
            }
        }
        for n in right {
            out.push(AdjacencyRelation::new(
                texts[k].clone(),
                texts[n].clone(),
                RelationDirection::Horizontal,
            ));
        }
        for n in below {
            out.push(AdjacencyRelation::new(
                texts[k].clone(),
                texts[n].clone(),
                RelationDirection::Vertical,
            ));
        }
    }
    out.sort();
    out
}

pub fn adjacency_relations(model: &TableModel, normalize: bool) -> Vec<AdjacencyRelation> {
    let (rows, cols, cells) = logical_cells_from_model(model);
    relations_of_cells(rows, cols, &cells, normalize)
}

pub fn truth_relations(table: &GroundTruthTable, normalize: bool) -> Vec<AdjacencyRelation> {
    let (rows, cols, cells) = logical_cells_from_truth(table);
    relations_of_cells(rows, cols, &cells, normalize)
}

/// Size of the multiset intersection.
pub fn multiset_matches(a: &[AdjacencyRelation], b: &[AdjacencyRelation]) -> usize {
    let mut counts: BTreeMap<&AdjacencyRelation, usize> = BTreeMap::new();
    for r in a {
        *counts.entry(r).or_default() += 1;
    }
    let mut matched = 0;
    for r in b {
        if let Some(n) = counts.get_mut(r) {
            if *n > 0 {
                *n -= 1;
                matched += 1;
            }
        }
    }
    matched
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DocumentScore {
    pub id: String,
    pub predicted: usize,
    pub truth: usize,
    pub matched: usize,
    #[serde(flatten)]
    pub scores: Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub per_document: Vec<DocumentScore>,
    /// Mean of per-document precision and recall; F1 is taken from those
    /// means.
    pub average: Scores,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub micro: Option<Scores>,
    /// Documents present on one side only, left out of the averages.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub unmatched: Vec<String>,
}

/// Scores predicted against true relations per document id and averages
/// over the documents present on both sides.
pub fn icdar_score(
    predicted: &BTreeMap<String, Vec<AdjacencyRelation>>,
    truth: &BTreeMap<String, Vec<AdjacencyRelation>>,
    micro: bool,
) -> MetricsReport {
    let mut per_document = Vec::new();
    let mut unmatched = Vec::new();
    for id in predicted.keys().filter(|k| !truth.contains_key(*k)) {
        log::warn!("document {id} has predictions but no ground truth; skipped");
        unmatched.push(id.clone());
    }
    let (mut tm, mut tp, mut tt) = (0usize, 0usize, 0usize);
    for (id, t) in truth {
        let Some(p) = predicted.get(id) else {
            log::warn!("document {id} has ground truth but no predictions; skipped");
            unmatched.push(id.clone());
            continue;
        };
        let matched = multiset_matches(p, t);
        tm += matched;
        tp += p.len();
        tt += t.len();
        per_document.push(DocumentScore {
            id: id.clone(),
            predicted: p.len(),
            truth: t.len(),
            matched,
            scores: Scores::from_counts(matched as f64, p.len() as f64, t.len() as f64),
        });
    }
    unmatched.sort();
    MetricsReport {
        average: average_scores(per_document.iter().map(|d| d.scores)),
        micro: micro.then(|| Scores::from_counts(tm as f64, tp as f64, tt as f64)),
        per_document,
        unmatched,
    }
}

/// Macro average; an empty input averages to zero.
pub fn average_scores(scores: impl Iterator<Item = Scores>) -> Scores {
    let (mut p, mut r, mut n) = (0.0, 0.0, 0usize);
    for s in scores {
        p += s.precision;
        r += s.recall;
        n += 1;
    }
    if n == 0 {
        return Scores::new(0.0, 0.0);
    }
    Scores::new(p / n as f64, r / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ocr_output::Direction;

    fn t(s: &str) -> TableCell {
        TableCell::Text(s.into())
    }

    fn model(rows: usize, cols: usize, cells: Vec<TableCell>) -> TableModel {
        TableModel { rows, cols, cells }
    }

    fn rel(a: &str, b: &str, d: RelationDirection) -> AdjacencyRelation {
        AdjacencyRelation::new(a.into(), b.into(), d)
    }

    use RelationDirection::{Horizontal as H, Vertical as V};

    #[test]
    fn examples() {
        assert_eq!(
            adjacency_relations(&model(1, 2, vec![t("a"), t("b")]), true),
            vec![rel("a", "b", H)]
        );
        let got = adjacency_relations(&model(2, 2, vec![t("a"), t("b"), t("c"), t("d")]), true);
        let mut want = vec![rel("a", "b", H), rel("c", "d", H), rel("a", "c", V), rel("b", "d", V)];
        want.sort();
        assert_eq!(got, want);
        assert_eq!(
            adjacency_relations(&model(1, 3, vec![t("a"), TableCell::Empty, t("b")]), true),
            vec![rel("a", "b", H)]
        );
    }

    #[test]
    fn spans_are_crossed() {
        // "wide" spans two columns above "x" and "y"
        let m = model(
            2,
            3,
            vec![
                t("wide"),
                TableCell::Extend(Direction::Left),
                t("z"),
                t("x"),
                t("y"),
                t("w"),
            ],
        );
        let got = adjacency_relations(&m, true);
        assert!(got.contains(&rel("wide", "z", H)));
        assert!(got.contains(&rel("wide", "x", V)));
        assert!(got.contains(&rel("wide", "y", V)));
        assert_eq!(got.len(), 6);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_text("  Total   Cost "), "total cost");
        assert_eq!(normalize_text("4 , 5"), "4,5");
        assert_eq!(normalize_text("( a )"), "(a)");
    }

    #[test]
    fn scoring() {
        let full = adjacency_relations(&model(2, 2, vec![t("a"), t("b"), t("c"), t("d")]), true);
        let mut truth = BTreeMap::new();
        truth.insert("doc".to_string(), full.clone());
        let same = icdar_score(&truth, &truth, false);
        assert_eq!(
            (same.average.precision, same.average.recall, same.average.f1),
            (1.0, 1.0, 1.0)
        );

        let mut pred = BTreeMap::new();
        pred.insert("doc".to_string(), full[..3].to_vec());
        pred.insert("extra".to_string(), vec![]);
        let r = icdar_score(&pred, &truth, true);
        assert_eq!(r.average.precision, 1.0);
        assert_eq!(r.average.recall, 0.75);
        assert_eq!(r.unmatched, vec!["extra".to_string()]);
        assert_eq!(r.per_document.len(), 1);
    }
}
