//! The `run` subcommand: generate or load instances, render every prompt,
//! execute each (model, instance, cell) unit once, then aggregate.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use reasonbench::gateway::{
    json_digest, Backend, Gateway, GatewayError, GatewayStats, HttpBackend, MockBackend, OracleBackend,
    RateLimiter, ResponseCache,
};
use reasonbench::gen::{generate_batch, GenError, DEFAULT_MAX_REGEN};
use reasonbench::prompt::{estimate_tokens, render_with, select_exemplars, PromptBundle, PromptError, RenderOptions};
use reasonbench::report::{aggregate, emit_all, CellKey, LogEntry, ReportError, RunMeta, RunReport};
use reasonbench::scaling::{execute, ExecOptions, ScalingError, ScalingStrategy, DEFAULT_MAX_OUTPUT_TOKENS};
use reasonbench::task::{read_instances, ProblemInstance, TaskError};

use crate::config::{BackendKind, ModelConfig, RunConfig};

pub const LOG_FILE: &str = "attempts.jsonl";
pub const DEFAULT_CACHE: &str = "cache/responses.jsonl";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error("prompt for {id}: {source}")]
    Prompt { id: String, source: PromptError },
    #[error("model {model}: {source}")]
    Gateway { model: String, source: GatewayError },
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |e| RunError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Where a run reads and writes, after command-line overrides.
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub out_dir: PathBuf,
    pub cache: PathBuf,
}

impl RunPaths {
    pub fn from_config(cfg: &RunConfig) -> Self {
        RunPaths {
            out_dir: cfg.out_dir.clone(),
            cache: cfg.cache_path.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub report: RunReport,
    pub written: Vec<PathBuf>,
    /// Units executed in this invocation.
    pub executed: usize,
    /// Units skipped because the log already held their verdict.
    pub resumed: usize,
    pub gateway: GatewayStats,
}

/// Per-cell estimate printed by `--dry-run`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellEstimate {
    pub key: CellKey,
    pub units: usize,
    /// Upper bound on backend calls.
    pub max_calls: usize,
    /// Prompt tokens of the first round of every unit.
    pub prompt_tokens: usize,
}

/// A prompt rendered once and shared by every model and strategy.
struct Rendered {
    instance: usize,
    bundle: PromptBundle,
}

struct Unit<'a> {
    model: usize,
    instance: &'a ProblemInstance,
    bundle: &'a PromptBundle,
    strategy: ScalingStrategy,
    key: CellKey,
    digest: String,
}

/// Instances of the run: read from `instances_file` and restricted to the
/// configured tasks, or generated in task, level then seed order.
pub fn load_instances(cfg: &RunConfig) -> Result<Vec<ProblemInstance>, RunError> {
    if let Some(path) = &cfg.instances_file {
        return Ok(read_instances(path)?.into_iter().filter(|i| cfg.tasks.contains(&i.kind)).collect());
    }
    let table = cfg.table();
    let mut out = Vec::new();
    for &kind in &cfg.tasks {
        for &level in &cfg.levels {
            out.extend(generate_batch(&table, kind, level, cfg.seed, cfg.instance_count, DEFAULT_MAX_REGEN)?);
        }
    }
    Ok(out)
}

fn exec_options(cfg: &RunConfig, model: &ModelConfig) -> ExecOptions {
    ExecOptions {
        model_name: model.model_id().to_string(),
        max_output_tokens: cfg.max_output_tokens.unwrap_or(DEFAULT_MAX_OUTPUT_TOKENS),
        selection: cfg.selection,
        thinking_cap: cfg.thinking_cap,
        ..ExecOptions::default()
    }
}

fn render_all(cfg: &RunConfig, instances: &[ProblemInstance]) -> Result<Vec<Rendered>, RunError> {
    let table = cfg.table();
    let options = RenderOptions { max_prompt_tokens: cfg.max_prompt_tokens };
    let mut modes: Vec<_> = cfg.matrix.iter().map(|c| c.mode).collect();
    modes.sort();
    modes.dedup();
    let jobs: Vec<(usize, _)> =
        (0..instances.len()).flat_map(|i| modes.iter().map(move |&m| (i, m))).collect();
    jobs.par_iter()
        .map(|&(i, mode)| {
            let inst = &instances[i];
            let wrap = |source| RunError::Prompt { id: inst.id.clone(), source };
            let exemplars = select_exemplars(inst, mode, &table).map_err(wrap)?;
            let bundle = render_with(inst, mode, &exemplars, &options).map_err(wrap)?;
            Ok(Rendered { instance: i, bundle })
        })
        .collect()
}

fn build_units<'a>(
    cfg: &RunConfig,
    instances: &'a [ProblemInstance],
    rendered: &'a [Rendered],
) -> Vec<Unit<'a>> {
    let mut units = Vec::new();
    for (m, model) in cfg.models.iter().enumerate() {
        let opts = exec_options(cfg, model);
        for r in rendered {
            let inst = &instances[r.instance];
            for cell in cfg.matrix.iter().filter(|c| c.mode == r.bundle.mode) {
                let key = CellKey {
                    task: inst.kind,
                    model: model.name.clone(),
                    prompt_mode: cell.mode,
                    strategy: cell.strategy,
                };
                let digest = json_digest(&(model.identity(), inst, &r.bundle, cell.strategy, &opts));
                units.push(Unit { model: m, instance: inst, bundle: &r.bundle, strategy: cell.strategy, key, digest });
            }
        }
    }
    units
}

fn backend_for(model: &ModelConfig, instances: &[ProblemInstance]) -> Result<Box<dyn Backend>, RunError> {
    let backend: Box<dyn Backend> = match model.backend {
        BackendKind::Mock => Box::new(
            MockBackend::constant(model.reply.clone().unwrap_or_default())
                .named(model.name.clone())
                .with_thinking(model.thinking.unwrap_or(false)),
        ),
        BackendKind::Oracle => Box::new(OracleBackend::new(instances)),
        BackendKind::Anthropic | BackendKind::OpenAi => {
            let http = model.http_config().expect("validated HTTP model");
            Box::new(
                HttpBackend::from_env(model.model_id(), http)
                    .map_err(|source| RunError::Gateway { model: model.name.clone(), source })?,
            )
        }
    };
    Ok(backend)
}

/// Log entries with a verdict, keyed by unit digest; a later line for the
/// same unit replaces an earlier one.
pub fn read_log(path: &Path) -> Result<Vec<LogEntry>, RunError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path).map_err(io_err(path))?;
    let mut by_digest: BTreeMap<String, LogEntry> = BTreeMap::new();
    let mut anonymous = Vec::new();
    for (no, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<LogEntry>(&line) {
            Ok(e) if e.unit_digest.is_empty() => anonymous.push(e),
            Ok(e) => {
                by_digest.insert(e.unit_digest.clone(), e);
            }
            // a torn final line from an interrupted run
            Err(err) => warn!("{}:{}: skipping unreadable entry: {err}", path.display(), no + 1),
        }
    }
    anonymous.extend(by_digest.into_values());
    Ok(anonymous)
}

fn ends_with_newline(path: &Path) -> std::io::Result<bool> {
    use std::io::{Read, Seek, SeekFrom};
    let mut f = File::open(path)?;
    if f.metadata()?.len() == 0 {
        return Ok(true);
    }
    f.seek(SeekFrom::End(-1))?;
    let mut last = [0u8];
    f.read_exact(&mut last)?;
    Ok(last[0] == b'\n')
}

fn now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn expected_per_cell(cfg: &RunConfig, instances: &[ProblemInstance]) -> Option<u32> {
    let mut per_task: HashMap<_, u32> = HashMap::new();
    for i in instances {
        *per_task.entry(i.kind).or_default() += 1;
    }
    let mut counts = cfg.tasks.iter().map(|t| per_task.get(t).copied().unwrap_or(0));
    let first = counts.next()?;
    counts.all(|c| c == first).then_some(first)
}

fn plan(cfg: &RunConfig, instances: &[ProblemInstance]) -> Vec<CellKey> {
    let mut tasks: Vec<_> = instances.iter().map(|i| i.kind).collect();
    tasks.sort();
    tasks.dedup();
    let mut keys = Vec::new();
    for model in &cfg.models {
        for &task in &tasks {
            for c in &cfg.matrix {
                keys.push(CellKey { task, model: model.name.clone(), prompt_mode: c.mode, strategy: c.strategy });
            }
        }
    }
    keys
}

fn max_calls(strategy: ScalingStrategy) -> usize {
    match strategy {
        ScalingStrategy::Parallel { n } => n as usize,
        ScalingStrategy::Sequential { rounds } => rounds as usize + 1,
        ScalingStrategy::NoScaling | ScalingStrategy::Internal { .. } => 1,
    }
}

/// Renders every prompt and sizes the run without calling any backend.
pub fn dry_run(cfg: &RunConfig, instances: &[ProblemInstance]) -> Result<Vec<CellEstimate>, RunError> {
    let rendered = render_all(cfg, instances)?;
    let units = build_units(cfg, instances, &rendered);
    let mut cells: BTreeMap<String, CellEstimate> = BTreeMap::new();
    for u in &units {
        let tokens: usize = u.bundle.messages().iter().map(|m| estimate_tokens(&m.text)).sum();
        let order = format!("{}|{}|{}|{}", u.key.model, u.key.task, u.key.prompt_mode.slug(), u.strategy);
        let e = cells.entry(order).or_insert_with(|| CellEstimate {
            key: u.key.clone(),
            units: 0,
            max_calls: 0,
            prompt_tokens: 0,
        });
        e.units += 1;
        e.max_calls += max_calls(u.strategy);
        e.prompt_tokens += tokens * max_calls(u.strategy);
    }
    Ok(cells.into_values().collect())
}

/// Executes the configured run, resuming from `out_dir/attempts.jsonl`.
pub fn run(cfg: &RunConfig, instances: &[ProblemInstance], paths: &RunPaths) -> Result<RunSummary, RunError> {
    let started_at = now();
    std::fs::create_dir_all(&paths.out_dir).map_err(io_err(&paths.out_dir))?;
    let log_path = paths.out_dir.join(LOG_FILE);
    let done: HashSet<String> =
        read_log(&log_path)?.into_iter().filter(|e| e.final_verdict.is_some()).map(|e| e.unit_digest).collect();

    let rendered = render_all(cfg, instances)?;
    let units = build_units(cfg, instances, &rendered);
    let (pending, resumed): (Vec<&Unit>, Vec<&Unit>) = units.iter().partition(|u| !done.contains(&u.digest));
    info!("{} units planned, {} already logged", units.len(), resumed.len());

    let cache = Arc::new(ResponseCache::open(&paths.cache).map_err(|source| RunError::Gateway {
        model: String::from("*"),
        source,
    })?);
    if cache.skipped() > 0 {
        warn!("{} unreadable cache lines ignored", cache.skipped());
    }
    let gateways = cfg
        .models
        .iter()
        .map(|m| {
            let mut g = Gateway::new(backend_for(m, instances)?).with_cache(Arc::clone(&cache));
            if let Some(rpm) = m.rpm {
                g = g.with_limiter(Arc::new(RateLimiter::new(rpm)));
            }
            Ok(g)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let options: Vec<ExecOptions> = cfg.models.iter().map(|m| exec_options(cfg, m)).collect();

    let mut file = OpenOptions::new().create(true).append(true).open(&log_path).map_err(io_err(&log_path))?;
    // end a torn last line so the next entry starts on its own line
    if !ends_with_newline(&log_path).map_err(io_err(&log_path))? {
        file.write_all(b"\n").map_err(io_err(&log_path))?;
    }
    let writer = Mutex::new(BufWriter::new(file));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.concurrency)
        .build()
        .map_err(|e| RunError::Io { path: log_path.clone(), message: e.to_string() })?;
    pool.install(|| {
        pending.par_iter().try_for_each(|u| -> Result<(), RunError> {
            let exec = execute(u.instance, u.bundle, u.strategy, &gateways[u.model], &options[u.model])?;
            let entry = LogEntry {
                cell: u.key.clone(),
                instance_id: u.instance.id.clone(),
                unit_digest: u.digest.clone(),
                final_verdict: Some(exec.final_verdict),
                partial_parallel: exec.partial_parallel,
                attempts: exec.attempts,
            };
            let line = serde_json::to_string(&entry).expect("log entries serialise");
            let mut w = writer.lock().expect("log writer poisoned");
            writeln!(w, "{line}").and_then(|_| w.flush()).map_err(io_err(&log_path))
        })
    })?;
    drop(writer);

    let wanted: HashSet<&str> = units.iter().map(|u| u.digest.as_str()).collect();
    let log: Vec<LogEntry> =
        read_log(&log_path)?.into_iter().filter(|e| wanted.contains(e.unit_digest.as_str())).collect();
    let mut report = aggregate(&log, &plan(cfg, instances), expected_per_cell(cfg, instances));

    let mut stats = GatewayStats::default();
    for g in &gateways {
        let s = g.stats();
        stats.requests += s.requests;
        stats.cache_hits += s.cache_hits;
        stats.backend_calls += s.backend_calls;
        stats.retries += s.retries;
    }
    let dialects: Vec<String> = cfg
        .models
        .iter()
        .filter_map(|m| m.http_config().map(|h| serde_json::to_value(h.dialect).expect("dialect").as_str().unwrap_or("").to_string()))
        .collect();
    report.run_meta = RunMeta {
        config: serde_json::to_value(cfg).expect("config serialises"),
        base_seed: cfg.seed,
        instance_level: cfg.levels.first().copied().unwrap_or_default(),
        backend: cfg.models.iter().map(gateway_label).collect::<Vec<_>>().join(","),
        dialect: (!dialects.is_empty()).then(|| dialects.join(",")),
        gateway: stats,
        started_at,
        finished_at: now(),
    };
    let written = emit_all(&report, &paths.out_dir)?;
    Ok(RunSummary { report, written, executed: pending.len(), resumed: resumed.len(), gateway: stats })
}

fn gateway_label(m: &ModelConfig) -> String {
    let kind = serde_json::to_value(m.backend).expect("backend kind");
    format!("{}:{}", kind.as_str().unwrap_or(""), m.model_id())
}
