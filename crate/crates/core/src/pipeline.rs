//! The reduction pipeline: from a degree-2 coefficient table to elliptic
//! images of one Fourier-Jacobi coefficient.
//!
//! Stages: (1) a primitive entry with nonzero coefficient, (2) a unimodular
//! g moving it to an odd prime bottom-right entry p, (3) the index-p slice of
//! the transformed table, (4) the untwisted and all twisted Eichler-Zagier
//! images, (5) a summary of which images are nonzero.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith;
use crate::characters::{build_g, extensions_of, g_characters, unit_group_capped};
use crate::elliptic::QExpansion;
use crate::jacobi::{ez_map, twisted_ez_map, JacobiCoefficientSystem};
use crate::lattice::{
    fj_extract, prime_rep_search, sniff_table_field, CoefficientTable, HermitianForm, LatticeError,
};
use crate::ring::QuadField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum IndexPolicy {
    /// Nonzero primitive entry with the smallest |D| det, ties by (n, m, s).
    #[default]
    SmallestDeterminant,
    /// Nonzero primitive entry whose bottom-right entry is smallest.
    SmallestIndex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    #[default]
    Exact,
    FloatReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub field: i64,
    pub weight: i64,
    pub input: PathBuf,
    pub policy: IndexPolicy,
    pub search_bound: u64,
    /// Largest |D| p for which the character group is built.
    pub group_cap: u64,
    pub output_dir: Option<PathBuf>,
    pub backend: Backend,
}

impl PipelineConfig {
    pub fn new(field: i64, weight: i64, input: impl Into<PathBuf>) -> Self {
        PipelineConfig {
            field,
            weight,
            input: input.into(),
            policy: IndexPolicy::default(),
            search_bound: 200,
            group_cap: 200,
            output_dir: None,
            backend: Backend::default(),
        }
    }

    pub fn validate(&self) -> Result<QuadField, PipelineError> {
        let f = QuadField::new(self.field).map_err(|e| PipelineError::config(e.to_string()))?;
        if self.search_bound == 0 || self.group_cap == 0 {
            return Err(PipelineError::config("bounds must be positive".into()));
        }
        if !self.input.exists() {
            return Err(PipelineError::config(format!(
                "input {} does not exist",
                self.input.display()
            )));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("stage {stage}: {message}")]
pub struct PipelineError {
    pub stage: String,
    pub message: String,
}

impl PipelineError {
    fn at(stage: &str, message: impl ToString) -> Self {
        PipelineError {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }

    fn config(message: String) -> Self {
        Self::at("config", message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryReport {
    pub n: i64,
    pub m: i64,
    pub s: String,
    pub value: String,
    /// Content divided out of the table before the search (1 when primitive).
    pub content: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchReport {
    pub found: bool,
    pub bound: u64,
    pub g: Option<[String; 4]>,
    pub p: Option<u64>,
    pub shell: Option<u64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceReport {
    pub index: u64,
    pub disc_bound: u64,
    pub classes: usize,
}

/// One elliptic image; `eta`/`ext` index the characters of G and their extensions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRow {
    pub label: String,
    pub eta: Option<usize>,
    pub ext: Option<usize>,
    pub weight: i64,
    pub level: u64,
    pub conductor: u64,
    pub level_over_conductor: u64,
    pub squarefree_quotient: bool,
    pub nonzero: bool,
    pub nonzero_count: u64,
    pub first_squarefree_n: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub field: i64,
    pub weight: i64,
    /// Highest stage completed, 0 to 5.
    pub stage_reached: u8,
    pub entry: Option<EntryReport>,
    pub search: Option<SearchReport>,
    pub slice: Option<SliceReport>,
    pub images: Vec<ImageRow>,
    pub any_nonzero: bool,
    /// "odd-D" or "even-D": which branch of the character analysis applies.
    pub case: String,
    /// Float summary of the first nonzero image (float-report backend only).
    pub float_summary: Option<Vec<f64>>,
}

impl PipelineReport {
    pub fn empty(field: i64, weight: i64) -> Self {
        PipelineReport {
            field,
            weight,
            stage_reached: 0,
            entry: None,
            search: None,
            slice: None,
            images: Vec::new(),
            any_nonzero: false,
            case: if field % 2 == 0 { "even-D" } else { "odd-D" }.to_string(),
            float_summary: None,
        }
    }

    pub fn not_found(&self) -> bool {
        self.search.as_ref().is_some_and(|s| !s.found)
    }
}

/// Options for the in-memory run.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub policy: IndexPolicy,
    pub search_bound: u64,
    pub group_cap: u64,
    pub backend: Backend,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            policy: IndexPolicy::default(),
            search_bound: 200,
            group_cap: 200,
            backend: Backend::default(),
        }
    }
}

pub fn run_reduction_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport, PipelineError> {
    let field = cfg.validate()?;
    let text = std::fs::read_to_string(&cfg.input).map_err(|e| PipelineError::at("input", e))?;
    if let Some(f) = sniff_table_field(&text).map_err(|e| PipelineError::at("input", e))? {
        if f != field {
            return Err(PipelineError::at(
                "input",
                format!("table is over D={} but the config says D={}", f.disc(), field.disc()),
            ));
        }
    }
    let table =
        CoefficientTable::from_jsonl(&text, field, cfg.weight).map_err(|e| PipelineError::at("input", e))?;
    let opts = RunOptions {
        policy: cfg.policy,
        search_bound: cfg.search_bound,
        group_cap: cfg.group_cap,
        backend: cfg.backend,
    };
    let report = run_on_table(&table, &opts)?;
    if let Some(dir) = &cfg.output_dir {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::at("emit", e))?;
        emit_report(&report, ReportFormat::Json, &dir.join("report.json"))
            .map_err(|e| PipelineError::at("emit", e))?;
        emit_report(&report, ReportFormat::Csv, &dir.join("images.csv"))
            .map_err(|e| PipelineError::at("emit", e))?;
    }
    Ok(report)
}

fn select_entry(
    table: &CoefficientTable,
    policy: IndexPolicy,
) -> Option<(HermitianForm, crate::cyclotomic::CyclotomicNumber)> {
    let mut best: Option<((u64, i64, (i64, i64, i64, i64)), HermitianForm)> = None;
    for (t, v) in table.iter() {
        if v.is_zero() || !t.content().1 {
            continue;
        }
        let det = t.scaled_det().ok()?;
        let key = match policy {
            IndexPolicy::SmallestDeterminant => (det, 0, t.key()),
            IndexPolicy::SmallestIndex => (t.m as u64, det as i64, t.key()),
        };
        if best.as_ref().map_or(true, |(k, _)| key < *k) {
            best = Some((key, t));
        }
    }
    best.map(|(_, t)| {
        let v = table.get(&t).cloned().expect("selected from the table");
        (t, v)
    })
}

pub fn run_on_table(table: &CoefficientTable, opts: &RunOptions) -> Result<PipelineReport, PipelineError> {
    let field = table.field();
    let mut report = PipelineReport::empty(field.disc(), table.weight());

    // stage 1
    let nonzero: Vec<HermitianForm> = table
        .iter()
        .filter(|(_, v)| !v.is_zero())
        .map(|(t, _)| t)
        .collect();
    if nonzero.is_empty() {
        return Err(PipelineError::at("1", "the table has no nonzero entry"));
    }
    let (work, content) = match select_entry(table, opts.policy) {
        Some(_) => (table.clone(), 1),
        None => {
            // only imprimitive entries: divide by the content of the smallest one
            let t = nonzero
                .iter()
                .min_by_key(|t| (t.scaled_det().unwrap_or(u64::MAX), t.key()))
                .unwrap();
            let c = t.content().0;
            (table.divide_content(c as i64), c)
        }
    };
    let (t0, v0) = select_entry(&work, opts.policy)
        .ok_or_else(|| PipelineError::at("1", "no primitive nonzero entry after content division"))?;
    report.entry = Some(EntryReport {
        n: t0.n,
        m: t0.m,
        s: t0.s.to_string(),
        value: v0.to_string(),
        content,
    });
    report.stage_reached = 1;

    // stage 2
    let rep = match prime_rep_search(&t0, opts.search_bound) {
        Ok(r) => r,
        Err(LatticeError::NotFound(b)) => {
            report.search = Some(SearchReport {
                found: false,
                bound: b,
                g: None,
                p: None,
                shell: None,
                message: Some(format!("no odd prime representation within shell {b}")),
            });
            return Ok(report);
        }
        Err(e) => return Err(PipelineError::at("2", e)),
    };
    report.search = Some(SearchReport {
        found: true,
        bound: opts.search_bound,
        g: Some([
            rep.g.alpha.to_string(),
            rep.g.beta.to_string(),
            rep.g.gamma.to_string(),
            rep.g.delta.to_string(),
        ]),
        p: Some(rep.p),
        shell: Some(rep.shell),
        message: None,
    });
    report.stage_reached = 2;

    // stage 3
    let moved = work.transform(&rep.g).map_err(|e| PipelineError::at("3", e))?;
    let phi = fj_extract(&moved, rep.p).map_err(|e| PipelineError::at("3", e))?;
    report.slice = Some(SliceReport {
        index: rep.p,
        disc_bound: phi.disc_bound(),
        classes: phi.class_count(),
    });
    report.stage_reached = 3;

    // stage 4
    report.images = images_of(&phi, opts.group_cap).map_err(|e| PipelineError::at("4", e))?;
    report.stage_reached = 4;

    // stage 5
    report.any_nonzero = report.images.iter().any(|r| r.nonzero);
    if opts.backend == Backend::FloatReport {
        report.float_summary = first_nonzero_image(&phi, opts.group_cap)
            .ok()
            .flatten()
            .map(|f| (1..=f.precision().min(20)).map(|n| f.normalized_abs_sq(n).sqrt()).collect());
    }
    report.stage_reached = 5;
    Ok(report)
}

fn row(label: String, eta: Option<usize>, ext: Option<usize>, f: &QExpansion) -> ImageRow {
    let conductor = f.character().conductor();
    let q = f.level() / conductor.max(1);
    let nonzero_count = (1..=f.precision()).filter(|&n| !f.coeff(n).is_zero()).count() as u64;
    ImageRow {
        label,
        eta,
        ext,
        weight: f.weight(),
        level: f.level(),
        conductor,
        level_over_conductor: q,
        squarefree_quotient: arith::is_squarefree(q),
        nonzero: nonzero_count > 0,
        nonzero_count,
        first_squarefree_n: f.first_squarefree_nonzero().map(|n| n as u64),
    }
}

/// iota(phi) and iota_eta~(phi) for every character of G and every extension.
pub fn images_of(phi: &JacobiCoefficientSystem, group_cap: u64) -> Result<Vec<ImageRow>, String> {
    let mut out = vec![row("iota".into(), None, None, &ez_map(phi))];
    let grp = unit_group_capped(phi.field(), phi.index(), group_cap).map_err(|e| e.to_string())?;
    let g = build_g(&grp);
    for (i, eta) in g_characters(&g, phi.weight()).iter().enumerate() {
        for (j, ext) in extensions_of(eta).iter().enumerate() {
            let f = twisted_ez_map(phi, ext).map_err(|e| e.to_string())?;
            out.push(row(format!("iota[eta={i},ext={j}]"), Some(i), Some(j), &f));
        }
    }
    Ok(out)
}

fn first_nonzero_image(phi: &JacobiCoefficientSystem, cap: u64) -> Result<Option<QExpansion>, String> {
    let h = ez_map(phi);
    if !h.is_cusp_zero() {
        return Ok(Some(h));
    }
    let grp = unit_group_capped(phi.field(), phi.index(), cap).map_err(|e| e.to_string())?;
    let g = build_g(&grp);
    for eta in g_characters(&g, phi.weight()) {
        for ext in extensions_of(&eta) {
            let f = twisted_ez_map(phi, &ext).map_err(|e| e.to_string())?;
            if !f.is_cusp_zero() {
                return Ok(Some(f));
            }
        }
    }
    Ok(None)
}

/// The degree-2 table whose index-m slice is `sys`: every (n, s, m)
/// with |D| n m - N(s) <= the bound and a nonzero value.
pub fn table_from_system(sys: &JacobiCoefficientSystem) -> CoefficientTable {
    let f = sys.field();
    let m = sys.index() as i64;
    let mut table = CoefficientTable::new(f, sys.weight());
    let b = sys.disc_bound() as i64;
    let r = ((b + f.abs_disc() as i64 * m) as f64).sqrt() as i64 + 2;
    for n in 1..=(b / (f.abs_disc() as i64 * m) + 2) {
        for a in -r..=r {
            for bb in -r..=r {
                let Ok(t) = HermitianForm::new(n, m, f.elem(a, bb)) else { continue };
                if t.scaled_det().expect("positive definite") > sys.disc_bound() {
                    continue;
                }
                let v = sys.lookup(n, t.s).expect("inside the window");
                if !v.is_zero() {
                    table.insert(t, v).expect("same field");
                }
            }
        }
    }
    table
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Column order of the image table.
pub const CSV_COLUMNS: [&str; 11] = [
    "label",
    "eta",
    "ext",
    "weight",
    "level",
    "conductor",
    "level_over_conductor",
    "squarefree_quotient",
    "nonzero",
    "nonzero_count",
    "first_squarefree_n",
];

pub fn report_to_string(report: &PipelineReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(CSV_COLUMNS).expect("header");
            for r in &report.images {
                w.serialize(r).expect("row serializes");
            }
            String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf8")
        }
    }
}

pub fn emit_report(report: &PipelineReport, format: ReportFormat, path: &Path) -> std::io::Result<()> {
    std::fs::write(path, report_to_string(report, format))
}

pub fn parse_report_json(text: &str) -> Result<PipelineReport, String> {
    serde_json::from_str(text).map_err(|e| e.to_string())
}

pub fn parse_image_csv(text: &str) -> Result<Vec<ImageRow>, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    if header != CSV_COLUMNS {
        return Err(format!("unexpected columns {header:?}"));
    }
    r.deserialize().map(|row| row.map_err(|e| e.to_string())).collect()
}
