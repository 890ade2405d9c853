//! Ground-truth XML: `<document image="...">` holding `<table x0 y0 x1 y1>`
//! elements, each holding `<cell row col rowspan colspan>text</cell>`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region_detect::Region;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthCell {
    pub row: usize,
    pub col: usize,
    pub row_span: usize,
    pub col_span: usize,
    pub text: String,
}

impl GroundTruthCell {
    fn overlaps(&self, o: &GroundTruthCell) -> bool {
        self.row < o.row + o.row_span
            && o.row < self.row + self.row_span
            && self.col < o.col + o.col_span
            && o.col < self.col + self.col_span
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthTable {
    pub region: Region,
    pub cells: Vec<GroundTruthCell>,
}

impl GroundTruthTable {
    pub fn rows(&self) -> usize {
        self.cells.iter().map(|c| c.row + c.row_span).max().unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cells.iter().map(|c| c.col + c.col_span).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruthDocument {
    pub image: String,
    pub tables: Vec<GroundTruthTable>,
}

fn line_of(doc: &roxmltree::Document, node: roxmltree::Node) -> u32 {
    doc.text_pos_at(node.range().start).row
}

fn attr<T: std::str::FromStr>(doc: &roxmltree::Document, node: roxmltree::Node, name: &str) -> Result<T> {
    let line = line_of(doc, node);
    let raw = node.attribute(name).ok_or_else(|| {
        Error::GroundTruth(format!(
            "line {line}: <{}> is missing attribute {name}",
            node.tag_name().name()
        ))
    })?;
    raw.trim().parse().map_err(|_| {
        Error::GroundTruth(format!(
            "line {line}: attribute {name}=\"{raw}\" is not a non-negative integer"
        ))
    })
}

/// Parses and validates a ground-truth document.
pub fn parse_groundtruth(xml: &str) -> Result<GroundTruthDocument> {
    let doc = roxmltree::Document::parse(xml).map_err(|e| Error::GroundTruth(e.to_string()))?;
    let root = doc.root_element();
    if root.tag_name().name() != "document" {
        return Err(Error::GroundTruth(format!(
            "line {}: root element must be <document>, found <{}>",
            line_of(&doc, root),
            root.tag_name().name()
        )));
    }
    let image = root.attribute("image").unwrap_or_default().to_owned();
    let mut tables = Vec::new();
    for tnode in root.children().filter(|n| n.is_element()) {
        let tline = line_of(&doc, tnode);
        if tnode.tag_name().name() != "table" {
            return Err(Error::GroundTruth(format!(
                "line {tline}: expected <table>, found <{}>",
                tnode.tag_name().name()
            )));
        }
        let (x0, y0, x1, y1): (u32, u32, u32, u32) = (
            attr(&doc, tnode, "x0")?,
            attr(&doc, tnode, "y0")?,
            attr(&doc, tnode, "x1")?,
            attr(&doc, tnode, "y1")?,
        );
        if x0 > x1 || y0 > y1 {
            return Err(Error::GroundTruth(format!(
                "line {tline}: table region ({x0},{y0})-({x1},{y1}) is inverted"
            )));
        }
        let mut cells: Vec<(u32, GroundTruthCell)> = Vec::new();
        for cnode in tnode.children().filter(|n| n.is_element()) {
            let cline = line_of(&doc, cnode);
            if cnode.tag_name().name() != "cell" {
                return Err(Error::GroundTruth(format!(
                    "line {cline}: expected <cell>, found <{}>",
                    cnode.tag_name().name()
                )));
            }
            let cell = GroundTruthCell {
                row: attr(&doc, cnode, "row")?,
                col: attr(&doc, cnode, "col")?,
                row_span: attr(&doc, cnode, "rowspan")?,
                col_span: attr(&doc, cnode, "colspan")?,
                text: cnode
                    .children()
                    .filter(|n| n.is_text())
                    .filter_map(|n| n.text())
                    .collect(),
            };
            if cell.row_span == 0 || cell.col_span == 0 {
                return Err(Error::GroundTruth(format!("line {cline}: spans must be at least 1")));
            }
            if let Some((oline, other)) = cells.iter().find(|(_, o)| o.overlaps(&cell)) {
                return Err(Error::GroundTruth(format!(
                    "line {cline}: cell at row {} col {} overlaps cell at row {} col {} (line {oline})",
                    cell.row, cell.col, other.row, other.col
                )));
            }
            cells.push((cline, cell));
        }
        tables.push(GroundTruthTable {
            region: Region::new(x0, y0, x1, y1),
            cells: cells.into_iter().map(|(_, c)| c).collect(),
        });
    }
    Ok(GroundTruthDocument { image, tables })
}

pub fn load_groundtruth(path: &Path) -> Result<GroundTruthDocument> {
    let text = std::fs::read_to_string(path)?;
    parse_groundtruth(&text).map_err(|e| match e {
        Error::GroundTruth(m) => Error::GroundTruth(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out
}

pub fn write_groundtruth(doc: &GroundTruthDocument) -> String {
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    let _ = writeln!(s, "<document image=\"{}\">", escape(&doc.image));
    for t in &doc.tables {
        let r = t.region;
        let _ = writeln!(
            s,
            "  <table x0=\"{}\" y0=\"{}\" x1=\"{}\" y1=\"{}\">",
            r.x_min, r.y_min, r.x_max, r.y_max
        );
        for c in &t.cells {
            let _ = writeln!(
                s,
                "    <cell row=\"{}\" col=\"{}\" rowspan=\"{}\" colspan=\"{}\">{}</cell>",
                c.row,
                c.col,
                c.row_span,
                c.col_span,
                escape(&c.text)
            );
        }
        s.push_str("  </table>\n");
    }
    s.push_str("</document>\n");
    s
}
