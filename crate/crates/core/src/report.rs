//! Aggregation of final verdicts into ablation cells and the on-disk
//! report: markdown tables, a flat CSV, per-task plot series and a
//! metadata record.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gateway::GatewayStats;
use crate::prompt::PromptMode;
use crate::scaling::ScalingStrategy;
use crate::task::{TaskKind, Verdict};

#[derive(Debug, Clone, Error)]
pub enum ReportError {
    #[error("cannot write {path}: {message}")]
    IoFailure { path: PathBuf, message: String },
    #[error("malformed cells file: {0}")]
    Malformed(String),
}

/// Coordinates of one cell of the ablation grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub task: TaskKind,
    pub model: String,
    pub prompt_mode: PromptMode,
    pub strategy: ScalingStrategy,
}

impl CellKey {
    /// Plot label such as `AoT-IS`.
    pub fn config_label(&self) -> String {
        format!("{}-{}", self.prompt_mode.short(), self.strategy.slug().to_ascii_uppercase())
    }
}

/// One line of the attempt log: the outcome of one instance in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    #[serde(flatten)]
    pub cell: CellKey,
    pub instance_id: String,
    /// Digest of everything that determines the outcome; resumed runs
    /// skip units whose digest already has a final verdict.
    #[serde(default)]
    pub unit_digest: String,
    /// `None` when the run stopped before the instance finished.
    pub final_verdict: Option<Verdict>,
    #[serde(default)]
    pub partial_parallel: bool,
    #[serde(default)]
    pub attempts: Vec<crate::scaling::Attempt>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationCell {
    #[serde(flatten)]
    pub key: CellKey,
    pub successes: u32,
    pub total: u32,
}

impl AblationCell {
    pub fn rate(&self) -> Option<f64> {
        (self.total > 0).then(|| f64::from(self.successes) / f64::from(self.total))
    }

    pub fn percent(&self) -> Option<u32> {
        percent(self.successes, self.total)
    }
}

/// `round(100 k / n)` with halves rounded up, in exact integer arithmetic.
pub fn percent(k: u32, n: u32) -> Option<u32> {
    (n > 0).then(|| ((200 * u64::from(k) + u64::from(n)) / (2 * u64::from(n))) as u32)
}

/// Table text for a cell, e.g. `40/100 = 40%`.
pub fn format_cell(k: u32, n: u32) -> String {
    match percent(k, n) {
        Some(p) => format!("{k}/{n} = {p}%"),
        None => format!("{k}/{n} = n/a"),
    }
}

/// A configured cell whose data is missing or inconsistent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncompleteCell {
    pub key: CellKey,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub config: serde_json::Value,
    pub base_seed: u64,
    pub instance_level: u32,
    pub backend: String,
    pub dialect: Option<String>,
    pub gateway: GatewayStats,
    /// Unix seconds.
    pub started_at: u64,
    pub finished_at: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub cells: Vec<AblationCell>,
    pub incomplete: Vec<IncompleteCell>,
    pub run_meta: RunMeta,
}

/// Every distinct cell mentioned in the log, sorted.
pub fn plan_from_log(log: &[LogEntry]) -> Vec<CellKey> {
    log.iter().map(|e| e.cell.clone()).collect::<BTreeSet<_>>().into_iter().collect()
}

/// Counts successful finals per planned cell. Each instance counts once
/// per cell; repeated entries that disagree count as a failure and flag
/// the cell. The result does not depend on log order.
pub fn aggregate(log: &[LogEntry], plan: &[CellKey], expected_per_cell: Option<u32>) -> RunReport {
    // cell -> instance -> (seen success, seen failure, seen unfinished)
    let mut seen: BTreeMap<&CellKey, BTreeMap<&str, (bool, bool, bool)>> = BTreeMap::new();
    for e in log {
        let slot = seen.entry(&e.cell).or_default().entry(&e.instance_id).or_default();
        match &e.final_verdict {
            Some(v) if v.is_success() => slot.0 = true,
            Some(_) => slot.1 = true,
            None => slot.2 = true,
        }
    }
    let planned: BTreeSet<&CellKey> = plan.iter().collect();
    for extra in seen.keys().filter(|k| !planned.contains(*k)) {
        log::warn!("ignoring log entries for unplanned cell {extra:?}");
    }
    let mut cells = Vec::new();
    let mut incomplete = Vec::new();
    for key in planned {
        let mut cell = AblationCell { key: key.clone(), successes: 0, total: 0 };
        let mut unfinished = Vec::new();
        let mut conflicting = Vec::new();
        for (id, &(ok, bad, open)) in seen.get(key).into_iter().flatten() {
            if !ok && !bad {
                debug_assert!(open);
                unfinished.push(*id);
                continue;
            }
            cell.total += 1;
            if ok && bad {
                conflicting.push(*id);
            } else if ok {
                cell.successes += 1;
            }
        }
        let flag = |reason: String| IncompleteCell { key: key.clone(), reason };
        if cell.total == 0 && unfinished.is_empty() {
            incomplete.push(flag("no attempts recorded".into()));
        }
        if !unfinished.is_empty() {
            incomplete.push(flag(format!("{} instance(s) lack a final verdict: {}", unfinished.len(), unfinished.join(", "))));
        }
        if !conflicting.is_empty() {
            incomplete.push(flag(format!("conflicting verdicts for {}", conflicting.join(", "))));
        }
        if let Some(n) = expected_per_cell.filter(|&n| cell.total != n && cell.total > 0) {
            incomplete.push(flag(format!("{} of {n} instances finished", cell.total)));
        }
        cells.push(cell);
    }
    RunReport { cells, incomplete, run_meta: RunMeta::default() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    TableMd,
    Csv,
    PlotData,
}

pub const CSV_HEADER: &str = "task,model,prompt_mode,strategy,successes,total,rate";

/// Markdown: one table per (task, model), strategies as rows and prompt
/// formats as columns.
pub fn render_markdown(report: &RunReport) -> String {
    let mut groups: BTreeMap<(TaskKind, &str), Vec<&AblationCell>> = BTreeMap::new();
    for c in &report.cells {
        groups.entry((c.key.task, c.key.model.as_str())).or_default().push(c);
    }
    let header = format!(
        "| Scaling | {} |\n|---|{}\n",
        PromptMode::ALL.map(PromptMode::column_label).join(" | "),
        "---|".repeat(PromptMode::ALL.len())
    );
    let mut out = String::from("# Success rates\n");
    if groups.is_empty() {
        out.push('\n');
        out.push_str(&header);
    }
    for ((task, model), cells) in groups {
        let _ = write!(out, "\n## {} ({model})\n\n{header}", task.title());
        let strategies: BTreeSet<ScalingStrategy> = cells.iter().map(|c| c.key.strategy).collect();
        for s in strategies {
            let _ = write!(out, "| {} |", s.row_label());
            for m in PromptMode::ALL {
                match cells.iter().find(|c| c.key.strategy == s && c.key.prompt_mode == m) {
                    Some(c) => {
                        let _ = write!(out, " {} |", format_cell(c.successes, c.total));
                    }
                    None => out.push_str(" - |"),
                }
            }
            out.push('\n');
        }
    }
    if !report.incomplete.is_empty() {
        out.push_str("\n## Incomplete cells\n\n");
        for i in &report.incomplete {
            let _ = writeln!(out, "- {} {} {} {}: {}", i.key.task.slug(), i.key.model, i.key.config_label(), i.key.strategy, i.reason);
        }
    }
    out
}

fn rate_text(c: &AblationCell) -> String {
    c.rate().map_or_else(String::new, |r| format!("{r:.6}"))
}

/// One row of `cells.csv`.
#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    task: String,
    model: String,
    prompt_mode: String,
    strategy: String,
    successes: u32,
    total: u32,
    /// Empty for cells without data.
    rate: String,
}

pub fn render_csv(report: &RunReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    if report.cells.is_empty() {
        w.write_record(CSV_HEADER.split(',')).expect("in-memory write");
    }
    for c in &report.cells {
        w.serialize(CsvRow {
            task: c.key.task.slug().into(),
            model: c.key.model.clone(),
            prompt_mode: c.key.prompt_mode.slug().into(),
            strategy: c.key.strategy.to_string(),
            successes: c.successes,
            total: c.total,
            rate: rate_text(c),
        })
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8")
}

/// Reads cells back from [`render_csv`] output.
pub fn parse_csv(text: &str) -> Result<Vec<AblationCell>, ReportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| ReportError::Malformed(e.to_string()))?;
    if header.iter().collect::<Vec<_>>().join(",") != CSV_HEADER {
        return Err(ReportError::Malformed("unexpected header".into()));
    }
    r.deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(|e| ReportError::Malformed(e.to_string()))?;
            let bad = |what: &str| ReportError::Malformed(format!("{what} in row for {}", row.task));
            Ok(AblationCell {
                key: CellKey {
                    task: row.task.parse().map_err(|_| bad("unknown task"))?,
                    model: row.model.clone(),
                    prompt_mode: row.prompt_mode.parse().map_err(|_| bad("unknown prompt mode"))?,
                    strategy: row.strategy.parse().map_err(|_| bad("unknown strategy"))?,
                },
                successes: row.successes,
                total: row.total,
            })
        })
        .collect()
}

/// Per-task plot series, points in grid order (format, then strategy).
pub fn render_plotdata(report: &RunReport) -> BTreeMap<TaskKind, String> {
    let mut by_task: BTreeMap<TaskKind, Vec<&AblationCell>> = BTreeMap::new();
    for c in &report.cells {
        by_task.entry(c.key.task).or_default().push(c);
    }
    by_task
        .into_iter()
        .map(|(task, mut cells)| {
            cells.sort_by(|a, b| {
                (&a.key.model, a.key.prompt_mode, a.key.strategy).cmp(&(&b.key.model, b.key.prompt_mode, b.key.strategy))
            });
            let mut out = String::from("model,config,successes,total,rate\n");
            for c in cells {
                let _ = writeln!(out, "{},{},{},{},{}", c.key.model, c.key.config_label(), c.successes, c.total, rate_text(c));
            }
            (task, out)
        })
        .collect()
}

fn write_file(path: &Path, text: &str) -> Result<(), ReportError> {
    let fail = |e: std::io::Error| ReportError::IoFailure { path: path.to_path_buf(), message: e.to_string() };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(fail)?;
    }
    std::fs::write(path, text).map_err(fail)
}

/// Writes one format under `dir` and returns the paths written.
pub fn emit(report: &RunReport, format: ReportFormat, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    match format {
        ReportFormat::TableMd => {
            let p = dir.join("report.md");
            write_file(&p, &render_markdown(report))?;
            written.push(p);
        }
        ReportFormat::Csv => {
            let p = dir.join("cells.csv");
            write_file(&p, &render_csv(report))?;
            written.push(p);
        }
        ReportFormat::PlotData => {
            for (task, text) in render_plotdata(report) {
                let p = dir.join("plotdata").join(format!("{}.csv", task.slug()));
                write_file(&p, &text)?;
                written.push(p);
            }
        }
    }
    Ok(written)
}

/// All three formats plus `run_meta.json`.
pub fn emit_all(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>, ReportError> {
    let mut written = Vec::new();
    for f in [ReportFormat::TableMd, ReportFormat::Csv, ReportFormat::PlotData] {
        written.extend(emit(report, f, dir)?);
    }
    let meta = dir.join("run_meta.json");
    let text = serde_json::to_string_pretty(&report.run_meta).expect("metadata serialises");
    write_file(&meta, &format!("{text}\n"))?;
    written.push(meta);
    Ok(written)
}
