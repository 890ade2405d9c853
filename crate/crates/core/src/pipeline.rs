//! End-to-end orchestration: page → regions → per-table structure → OCR →
//! CSV, plus the batch drivers behind the `extract`, `eval` and `synth`
//! commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cell_grid::{
    build_grid, classify_pairs, resolve_merges, scale_cells_to_original, CellBox, CellGrid, CommandClassifier,
    InkMergeClassifier, MergeClassifier, MergeResolution,
};
use crate::config::PipelineConfig;
use crate::debug;
use crate::error::{Error, Result};
use crate::evaluation::groundtruth::{load_groundtruth, write_groundtruth};
use crate::evaluation::metrics::{area_precision_recall, Scores};
use crate::evaluation::relations::{
    adjacency_relations, average_scores, icdar_score, truth_relations, DocumentScore, MetricsReport,
};
use crate::evaluation::synth::{generate_synthetic, random_spec, SynthSpec};
use crate::image_prep::{pad_vertical, resize_to_width, slice_strips, GrayImage, ScaleMap};
use crate::line_detect::{
    build_data_mask, find_ruling_lines, maxpool_3x3_stride1, second_derivatives, DataMask, Orientation, RealLine,
};
use crate::ocr_output::{
    emit_csv, extract_text, merge_multiline_rows, parse_csv, CommandOcr, OcrClient, StubOcr, TableModel,
    DEFAULT_OCR_COMMAND, OCR_ENV_VAR, WORDS_SUFFIX,
};
use crate::region_detect::{
    detect_columns, detect_row_bands, ensemble_union, group_rows, row_group_image, to_regions, BandScorer,
    ColumnScorer, Region, RowGroupColumns,
};
use crate::structure_lines::{structure_axis, AxisStructure};

/// Region detection output for one page.
#[derive(Debug, Clone)]
pub struct PageRegions {
    /// Resized and padded page the strips were cut from.
    pub working: GrayImage,
    pub scale: ScaleMap,
    pub band_flags: Vec<bool>,
    pub row_groups: Vec<RowGroupColumns>,
    /// Regions found on the page itself, before the ensemble.
    pub detected: Vec<Region>,
    /// Union with any external proposals.
    pub regions: Vec<Region>,
}

pub fn detect_page_regions(
    page: &GrayImage,
    proposals: &[Region],
    cfg: &PipelineConfig,
    bands: &dyn BandScorer,
    columns: &dyn ColumnScorer,
) -> Result<PageRegions> {
    let (resized, scale) = resize_to_width(page, cfg.working_width);
    let content_h = resized.height();
    let (working, scale) = pad_vertical(&resized, cfg.pad, scale);
    let strips = slice_strips(&working);
    let band_flags = detect_row_bands(&strips, bands, cfg.pad..cfg.pad + content_h)?;
    let mut row_groups = Vec::new();
    for run in group_rows(&band_flags, cfg.merge_gap) {
        let rows = run.rows();
        let img = row_group_image(&working, &rows);
        row_groups.push(RowGroupColumns {
            rows,
            crop_x: 0,
            crop_width: working.width(),
            columns: detect_columns(&img, columns)?,
        });
    }
    let detected = to_regions(&row_groups, &scale, page.width(), page.height());
    let regions = ensemble_union(&detected, proposals);
    Ok(PageRegions {
        working,
        scale,
        band_flags,
        row_groups,
        detected,
        regions,
    })
}

/// Structure of one table before OCR.
#[derive(Debug, Clone)]
pub struct TableStructure {
    /// Tight table box in page pixels.
    pub region: Region,
    /// Crop the lines were found in (possibly shrunk).
    pub crop: GrayImage,
    /// Crop → original-crop scale.
    pub scale: ScaleMap,
    pub real_lines: Vec<RealLine>,
    pub mask: DataMask,
    pub vertical: AxisStructure,
    pub horizontal: AxisStructure,
    pub grid: CellGrid,
    pub resolution: MergeResolution,
    pub boxes: Vec<CellBox>,
}

impl TableStructure {
    /// Whether the boundary above each row was inferred rather than drawn.
    pub fn inferred_row_boundaries(&self, proximity: u32) -> Vec<bool> {
        let rows = self.grid.rows();
        (0..rows)
            .map(|r| {
                let y = self.grid.row_bounds[r];
                r > 0
                    && !self.real_lines.iter().any(|l| {
                        l.orientation == Orientation::Horizontal
                            && y + proximity >= l.band.0
                            && y <= l.band.1 + proximity
                    })
            })
            .collect()
    }
}

/// Builds the merge classifier named by the config.
pub fn make_classifier(cfg: &PipelineConfig) -> Result<Box<dyn MergeClassifier>> {
    if cfg.classifier == "ink" {
        return Ok(Box::new(InkMergeClassifier {
            ink_threshold: cfg.ink_threshold,
            empty_eps: cfg.empty_eps,
        }));
    }
    match cfg.classifier.strip_prefix("cmd:") {
        Some(cmd) => Ok(Box::new(CommandClassifier::parse(cmd)?)),
        None => Err(Error::Config(format!("unknown classifier {:?}", cfg.classifier))),
    }
}

/// Locates the table inside `region` and recovers its cell structure.
pub fn analyze_table(
    page: &GrayImage,
    region: &Region,
    cfg: &PipelineConfig,
    classifier: &dyn MergeClassifier,
) -> Result<TableStructure> {
    let outer = region.expanded(cfg.region_margin, page.width(), page.height());
    let (bx0, by0, bx1, by1) = outer
        .crop(page)
        .ink_bbox(cfg.ink_threshold)
        .ok_or_else(|| Error::DegenerateTable(format!("region {region:?} holds no ink")))?;
    let tight = Region::new(
        outer.x_min + bx0,
        outer.y_min + by0,
        outer.x_min + bx1,
        outer.y_min + by1,
    );
    let original = tight.crop(page);
    let (crop, scale) = if original.width() > cfg.table_width {
        resize_to_width(&original, cfg.table_width)
    } else {
        (original, ScaleMap::identity())
    };
    let raw = second_derivatives(&crop).map_err(|e| Error::DegenerateTable(e.to_string()))?;
    let pooled = maxpool_3x3_stride1(&raw);
    let lcfg = cfg.line_config();
    let mut real_lines = Vec::new();
    for o in [Orientation::Vertical, Orientation::Horizontal] {
        real_lines.extend(find_ruling_lines(
            &crop,
            &raw,
            &pooled,
            o,
            &lcfg,
            cfg.ink_threshold,
            cfg.line_cover,
        ));
    }
    let mask = build_data_mask(&crop, &real_lines, cfg.ink_threshold, cfg.line_excl, cfg.line_run);
    let scfg = cfg.structure_config();
    let vertical = structure_axis(&mask, &real_lines, Orientation::Vertical, &scfg)?;
    let horizontal = structure_axis(&mask, &real_lines, Orientation::Horizontal, &scfg)?;
    let grid = build_grid(&vertical.final_lines, &horizontal.final_lines)?;
    let cleaned = mask.clean(&crop);
    let decisions = classify_pairs(&cleaned, &grid, classifier)?;
    let resolution = resolve_merges(&decisions, cfg.merge_threshold);
    let boxes = scale_cells_to_original(&resolution, &grid, &scale, &tight);
    Ok(TableStructure {
        region: tight,
        crop,
        scale,
        real_lines,
        mask,
        vertical,
        horizontal,
        grid,
        resolution,
        boxes,
    })
}

#[derive(Debug, Clone)]
pub struct TableResult {
    pub structure: TableStructure,
    pub model: TableModel,
    pub warnings: Vec<String>,
}

pub fn extract_table(
    page: &GrayImage,
    region: &Region,
    cfg: &PipelineConfig,
    classifier: &dyn MergeClassifier,
    ocr: &dyn OcrClient,
) -> Result<TableResult> {
    let structure = analyze_table(page, region, cfg, classifier)?;
    if structure.boxes.iter().any(|b| b.occupied) {
        ocr.ready()?;
    }
    let (mut model, mut warnings) = extract_text(
        ocr,
        page,
        &structure.boxes,
        structure.grid.rows(),
        structure.grid.cols(),
    );
    if cfg.merge_multiline {
        model = merge_multiline_rows(&model, &structure.inferred_row_boundaries(cfg.proximity as u32));
    }
    warnings.extend(structure.resolution.warnings.iter().cloned());
    Ok(TableResult {
        structure,
        model,
        warnings,
    })
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageTimings {
    pub regions_ms: f64,
    pub tables_ms: f64,
    pub total_ms: f64,
}

#[derive(Debug, Clone)]
pub struct PageResult {
    pub regions: PageRegions,
    pub tables: Vec<TableResult>,
    /// Regions that did not yield a table, with the reason.
    pub skipped: Vec<(Region, String)>,
    pub timings: StageTimings,
}

/// Runs the whole pipeline on one page. Tables that turn out degenerate are
/// skipped; any other table failure fails the page.
pub fn extract_page(
    page: &GrayImage,
    proposals: &[Region],
    cfg: &PipelineConfig,
    classifier: &dyn MergeClassifier,
    ocr: &dyn OcrClient,
) -> Result<PageResult> {
    let t0 = Instant::now();
    let scorer = cfg.ink_scorer();
    let regions = detect_page_regions(page, proposals, cfg, &scorer, &scorer)?;
    let t1 = Instant::now();
    let mut tables = Vec::new();
    let mut skipped = Vec::new();
    for region in &regions.regions {
        match extract_table(page, region, cfg, classifier, ocr) {
            Ok(t) => tables.push(t),
            Err(Error::DegenerateTable(msg)) => {
                log::warn!("skipping region {region:?}: {msg}");
                skipped.push((*region, msg));
            }
            Err(e) => return Err(e),
        }
    }
    let t2 = Instant::now();
    Ok(PageResult {
        regions,
        tables,
        skipped,
        timings: StageTimings {
            regions_ms: (t1 - t0).as_secs_f64() * 1e3,
            tables_ms: (t2 - t1).as_secs_f64() * 1e3,
            total_ms: (t2 - t0).as_secs_f64() * 1e3,
        },
    })
}

/// Page reference in a region file: a file stem or an index into the input
/// list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PageRef {
    Index(usize),
    Stem(String),
}

/// One entry of a region file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionRecord {
    pub x_min: u32,
    pub y_min: u32,
    pub x_max: u32,
    pub y_max: u32,
    pub page: PageRef,
}

impl RegionRecord {
    pub fn region(&self) -> Result<Region> {
        if self.x_min > self.x_max || self.y_min > self.y_max {
            return Err(Error::InputFormat(format!("inverted region {self:?}")));
        }
        Ok(Region::new(self.x_min, self.y_min, self.x_max, self.y_max))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarCell {
    pub row0: usize,
    pub col0: usize,
    pub row1: usize,
    pub col1: usize,
    #[serde(rename = "box")]
    pub bbox: Region,
    pub occupied: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SidecarTable {
    pub csv: String,
    pub region: Region,
    pub rows: usize,
    pub cols: usize,
    pub cells: Vec<SidecarCell>,
    /// Row-major occupancy of the unmerged grid.
    pub occupancy: Vec<bool>,
    pub warnings: Vec<String>,
}

/// Per-page JSON written next to the CSV files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Sidecar {
    pub image: String,
    pub regions: Vec<Region>,
    pub tables: Vec<SidecarTable>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings: Option<StageTimings>,
}

fn stem_of(path: &Path) -> String {
    path.file_stem().unwrap_or_default().to_string_lossy().into_owned()
}

/// OCR client named by the config (or the environment) for one image.
pub fn ocr_for(cfg: &PipelineConfig, image: &Path) -> Result<Box<dyn OcrClient>> {
    let template = match &cfg.ocr_cmd {
        Some(t) => t.clone(),
        None => std::env::var(OCR_ENV_VAR).unwrap_or_else(|_| DEFAULT_OCR_COMMAND.to_string()),
    };
    if let Some(dir) = template.strip_prefix("stub:") {
        let path = if dir.trim().is_empty() {
            image.to_path_buf()
        } else {
            Path::new(dir.trim()).join(image.file_name().unwrap_or_default())
        };
        return Ok(Box::new(StubOcr::for_image(&path)?));
    }
    Ok(Box::new(CommandOcr::parse(&template)?))
}

/// Result of one input file.
#[derive(Debug)]
pub struct FileOutcome {
    pub input: PathBuf,
    /// Number of tables written, or the failure.
    pub result: Result<usize>,
}

#[derive(Debug)]
pub struct ExtractSummary {
    pub outcomes: Vec<FileOutcome>,
    /// Every region found, for `--emit-regions`.
    pub regions: Vec<RegionRecord>,
}

impl ExtractSummary {
    pub fn failures(&self) -> impl Iterator<Item = &FileOutcome> {
        self.outcomes.iter().filter(|o| o.result.is_err())
    }
}

fn write_page_outputs(input: &Path, result: &PageResult, cfg: &PipelineConfig) -> Result<()> {
    let stem = stem_of(input);
    let mut tables = Vec::new();
    for (k, t) in result.tables.iter().enumerate() {
        let name = format!("{stem}_table{}.csv", k + 1);
        let mut buf = Vec::new();
        emit_csv(&t.model, cfg.arrows, &mut buf)?;
        std::fs::write(cfg.out_dir.join(&name), buf)?;
        let s = &t.structure;
        tables.push(SidecarTable {
            csv: name,
            region: s.region,
            rows: s.grid.rows(),
            cols: s.grid.cols(),
            cells: s
                .boxes
                .iter()
                .map(|b| SidecarCell {
                    row0: b.component.row0,
                    col0: b.component.col0,
                    row1: b.component.row1,
                    col1: b.component.col1,
                    bbox: b.region,
                    occupied: b.occupied,
                })
                .collect(),
            occupancy: s.resolution.occupancy.clone(),
            warnings: t.warnings.clone(),
        });
    }
    let sidecar = Sidecar {
        image: input.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        regions: result.regions.regions.clone(),
        tables,
        skipped: result.skipped.iter().map(|(r, m)| format!("{r:?}: {m}")).collect(),
        timings: cfg.timings.then(|| result.timings.clone()),
    };
    let mut json = serde_json::to_vec_pretty(&sidecar)?;
    json.push(b'\n');
    std::fs::write(cfg.out_dir.join(format!("{stem}.json")), json)?;
    if cfg.debug_images {
        write_debug_images(&stem, result, &cfg.out_dir.join("debug"))?;
    }
    Ok(())
}

fn write_debug_images(stem: &str, result: &PageResult, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let r = &result.regions;
    let working_regions: Vec<Region> = r
        .row_groups
        .iter()
        .flat_map(|g| {
            g.columns.iter().map(move |&iv| {
                let (x0, x1) = crate::region_detect::column_to_working(iv, g.crop_x, g.crop_width);
                Region::new(x0, g.rows.start, x1, g.rows.end.saturating_sub(1))
            })
        })
        .collect();
    debug::save_rgb(
        &debug::regions_overlay(&r.working, &working_regions),
        &dir.join(format!("{stem}_regions.png")),
    )?;
    for (k, t) in result.tables.iter().enumerate() {
        let s = &t.structure;
        let base = format!("{stem}_table{}", k + 1);
        debug::save_rgb(
            &debug::lines_overlay(&s.crop, &s.real_lines, &s.grid),
            &dir.join(format!("{base}_lines.png")),
        )?;
        debug::mask_image(&s.mask).save_png(dir.join(format!("{base}_mask.png")))?;
        debug::save_rgb(
            &debug::merge_overlay(&s.crop, &s.grid, &s.resolution),
            &dir.join(format!("{base}_merged.png")),
        )?;
    }
    Ok(())
}

fn process_file(
    index: usize,
    input: &Path,
    proposals: &[RegionRecord],
    cfg: &PipelineConfig,
    classifier: &dyn MergeClassifier,
) -> (Result<usize>, Vec<Region>) {
    let run = || -> Result<(usize, Vec<Region>)> {
        let stem = stem_of(input);
        let mine: Vec<Region> = proposals
            .iter()
            .filter(|p| match &p.page {
                PageRef::Index(i) => *i == index,
                PageRef::Stem(s) => *s == stem,
            })
            .map(RegionRecord::region)
            .collect::<Result<_>>()?;
        let page = GrayImage::load(input)?;
        let ocr = ocr_for(cfg, input)?;
        let result = extract_page(&page, &mine, cfg, classifier, ocr.as_ref())?;
        write_page_outputs(input, &result, cfg)?;
        Ok((result.tables.len(), result.regions.regions.clone()))
    };
    match run() {
        Ok((n, regions)) => (Ok(n), regions),
        Err(e) => {
            log::error!("{}: {e}", input.display());
            (Err(e), Vec::new())
        }
    }
}

/// Extracts tables from every input image. Each file succeeds or fails on
/// its own; outputs for other files are written regardless.
pub fn run_extract(inputs: &[PathBuf], proposals: &[RegionRecord], cfg: &PipelineConfig) -> Result<ExtractSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let classifier = make_classifier(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<(Result<usize>, Vec<Region>)> = pool.install(|| {
        inputs
            .par_iter()
            .enumerate()
            .map(|(i, p)| process_file(i, p, proposals, cfg, classifier.as_ref()))
            .collect()
    });
    let mut outcomes = Vec::new();
    let mut regions = Vec::new();
    for (input, (result, found)) in inputs.iter().zip(results) {
        let stem = stem_of(input);
        regions.extend(found.into_iter().map(|r| RegionRecord {
            x_min: r.x_min,
            y_min: r.y_min,
            x_max: r.x_max,
            y_max: r.y_max,
            page: PageRef::Stem(stem.clone()),
        }));
        outcomes.push(FileOutcome {
            input: input.clone(),
            result,
        });
    }
    Ok(ExtractSummary { outcomes, regions })
}

/// Expands directories into their image files, sorted by name.
pub fn collect_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = std::fs::read_dir(p)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.is_file()
                        && f.extension()
                            .and_then(|e| e.to_str())
                            .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg"))
                })
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    Area,
    Icdar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalReport {
    pub mode: EvalMode,
    #[serde(flatten)]
    pub metrics: MetricsReport,
    /// Ground-truth stems with no prediction sidecar; scored as empty
    /// predictions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<String>,
}

fn truth_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        if p.extension().is_some_and(|x| x == "xml") {
            out.insert(stem_of(&p), p);
        }
    }
    Ok(out)
}

fn predicted_sidecars(dir: &Path) -> Result<BTreeMap<String, Sidecar>> {
    let mut out = BTreeMap::new();
    if !dir.exists() {
        return Ok(out);
    }
    for e in std::fs::read_dir(dir)? {
        let p = e?.path();
        let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
        if p.extension().is_some_and(|x| x == "json") && !name.ends_with(WORDS_SUFFIX) {
            match serde_json::from_slice::<Sidecar>(&std::fs::read(&p)?) {
                Ok(s) => {
                    out.insert(stem_of(&p), s);
                }
                Err(e) => log::warn!("ignoring {}: {e}", p.display()),
            }
        }
    }
    Ok(out)
}

/// Scores a directory of extraction outputs against `<stem>.xml` files.
pub fn run_eval(
    pred_dir: &Path,
    truth_dir: &Path,
    mode: EvalMode,
    strict_text: bool,
    micro: bool,
) -> Result<EvalReport> {
    let truths = truth_files(truth_dir)?;
    let preds = predicted_sidecars(pred_dir)?;
    let mut missing = Vec::new();
    for stem in truths.keys() {
        if !preds.contains_key(stem) {
            log::warn!("no predictions for {stem}; scored as empty");
            missing.push(stem.clone());
        }
    }
    let metrics = match mode {
        EvalMode::Icdar => {
            let mut truth_rel = BTreeMap::new();
            for (stem, path) in &truths {
                let doc = load_groundtruth(path)?;
                let rel: Vec<_> = doc
                    .tables
                    .iter()
                    .flat_map(|t| truth_relations(t, !strict_text))
                    .collect();
                truth_rel.insert(stem.clone(), rel);
            }
            let mut pred_rel = BTreeMap::new();
            for stem in truths.keys().chain(preds.keys()) {
                let mut rel = Vec::new();
                if let Some(side) = preds.get(stem) {
                    for t in &side.tables {
                        let text = std::fs::read_to_string(pred_dir.join(&t.csv))?;
                        rel.extend(adjacency_relations(&parse_csv(&text)?, !strict_text));
                    }
                }
                pred_rel.insert(stem.clone(), rel);
            }
            icdar_score(&pred_rel, &truth_rel, micro)
        }
        EvalMode::Area => {
            let mut per_document = Vec::new();
            let (mut tm, mut tp, mut tt) = (0.0, 0.0, 0.0);
            for (stem, path) in &truths {
                let doc = load_groundtruth(path)?;
                let truth: Vec<Region> = doc.tables.iter().map(|t| t.region).collect();
                let pred: Vec<Region> = preds.get(stem).map(|s| s.regions.clone()).unwrap_or_default();
                let (ap, al, both) = crate::evaluation::metrics::union_areas(&pred, &truth);
                tm += both as f64;
                tp += ap as f64;
                tt += al as f64;
                per_document.push(DocumentScore {
                    id: stem.clone(),
                    predicted: ap as usize,
                    truth: al as usize,
                    matched: both as usize,
                    scores: area_precision_recall(&pred, &truth),
                });
            }
            let unmatched: Vec<String> = preds.keys().filter(|k| !truths.contains_key(*k)).cloned().collect();
            MetricsReport {
                average: average_scores(per_document.iter().map(|d| d.scores)),
                micro: micro.then(|| Scores::from_counts(tm, tp, tt)),
                per_document,
                unmatched,
            }
        }
    };
    Ok(EvalReport { mode, metrics, missing })
}

/// Overrides applied on top of randomly drawn table specs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SynthOverrides {
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub ruled: Option<bool>,
    pub thickness: Option<u32>,
    pub density: Option<f64>,
    pub span: Option<bool>,
    pub sparse_column: Option<bool>,
}

impl SynthOverrides {
    pub fn apply(&self, mut spec: SynthSpec) -> SynthSpec {
        if let Some(v) = self.rows {
            spec.rows = v;
        }
        if let Some(v) = self.cols {
            spec.cols = v;
        }
        if let Some(v) = self.ruled {
            spec.ruled = v;
        }
        if let Some(v) = self.thickness {
            spec.thickness = v;
        }
        if let Some(v) = self.density {
            spec.density = v;
        }
        if let Some(v) = self.span {
            spec.span = v;
        }
        if let Some(v) = self.sparse_column {
            spec.sparse_column = v;
            if v {
                spec.cols = spec.cols.max(3);
            }
        }
        spec
    }
}

/// Spec and seed of corpus entry `index`; entries are independent of
/// `count`.
pub fn corpus_entry(seed: u64, index: usize, overrides: &SynthOverrides) -> (SynthSpec, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let spec = overrides.apply(random_spec(&mut rng));
    let table_seed = rand::Rng::random(&mut rng);
    (spec, table_seed)
}

/// Writes `synth_NNNN.png`, `.xml` and `.words.json` files for `count`
/// tables. Returns the image paths.
pub fn run_synth(seed: u64, count: usize, overrides: &SynthOverrides, out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for i in 0..count {
        let (spec, table_seed) = corpus_entry(seed, i, overrides);
        let mut table = generate_synthetic(table_seed, &spec)?;
        let stem = format!("synth_{i:04}");
        let png = out_dir.join(format!("{stem}.png"));
        table.truth.image = format!("{stem}.png");
        table.image.save_png(&png)?;
        std::fs::write(out_dir.join(format!("{stem}.xml")), write_groundtruth(&table.truth))?;
        let mut words = serde_json::to_vec_pretty(&table.words)?;
        words.push(b'\n');
        std::fs::write(out_dir.join(format!("{stem}{WORDS_SUFFIX}")), words)?;
        written.push(png);
    }
    Ok(written)
}
