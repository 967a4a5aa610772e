//! Subcommand handlers. Each writes its human or JSONL output to `out` so
//! tests can drive the binary's logic in process.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use reasonbench::eval::{render_answer, score};
use reasonbench::gen::{generate_batch, load_fixture, DifficultyTable, GenError, DEFAULT_MAX_REGEN, FIXTURE_NAMES};
use reasonbench::oracle::{solve, SearchMode, TraceEvent};
use reasonbench::prompt::{render_with, select_exemplars, PromptError, PromptMode, RenderOptions};
use reasonbench::report::{aggregate, emit_all, format_cell, plan_from_log, ReportError};
use reasonbench::task::{read_instances, write_instances, ProblemInstance, TaskError, TaskKind, Verdict};

use crate::config::{validate_config, ConfigError, RunConfig};
use crate::pipeline::{self, RunError, RunPaths};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    /// 2 for bad input, 1 for failures while working.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io { path: path.to_path_buf(), message: e.to_string() }
}

#[derive(Debug, Parser)]
#[command(name = "reasonbench", version, about = "Generate, solve, prompt and score planning benchmarks")]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base seed; overrides the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate instances as JSONL.
    Gen {
        #[arg(long)]
        task: Option<TaskKind>,
        #[arg(long, default_value_t = 10)]
        level: u32,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Emit a built-in fixture instead.
        #[arg(long, conflicts_with = "task")]
        fixture: Option<String>,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve instances with a search oracle.
    Solve {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "dfs")]
        mode: SearchMode,
        /// Write every trace event as JSONL.
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Render prompts for instances.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "aot")]
        mode: PromptMode,
        /// Directory for `<id>.<mode>.txt` files; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Execute the configured benchmark matrix.
    Run {
        /// Output directory; overrides the configuration.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Response cache file; overrides the configuration.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Render prompts and estimate cost without calling a backend.
        #[arg(long)]
        dry_run: bool,
    },
    /// Score answers against instances.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
        /// JSONL of `{"id": .., "text": ..}` answers.
        #[arg(long, conflicts_with = "text")]
        answers: Option<PathBuf>,
        /// A single answer text, scored against `--id`.
        #[arg(long, requires = "id")]
        text: Option<String>,
        #[arg(long)]
        id: Option<String>,
    },
    /// Rebuild the report from an attempt log.
    Report {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a configuration file and print it with defaults filled in.
    Validate,
}

#[derive(Debug, Serialize)]
struct SolveLine<'a> {
    id: &'a str,
    mode: SearchMode,
    solved: bool,
    explored_count: usize,
    answer: Option<String>,
}

#[derive(Debug, Serialize)]
struct TraceLine<'a> {
    id: &'a str,
    #[serde(flatten)]
    event: &'a TraceEvent,
}

#[derive(Debug, Deserialize)]
struct AnswerLine {
    id: String,
    text: String,
}

#[derive(Debug, Serialize)]
struct VerdictLine<'a> {
    id: &'a str,
    verdict: &'a Verdict,
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Usage("--config is required".into()))?;
    let mut cfg = validate_config(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

/// The level table of `--config` when given, the built-in one otherwise.
fn table(cli: &Cli) -> Result<DifficultyTable, CliError> {
    match &cli.config {
        Some(_) => Ok(load_config(cli)?.table()),
        None => Ok(DifficultyTable::default()),
    }
}

fn emit_line(out: &mut dyn Write, value: &impl Serialize) -> Result<(), CliError> {
    let line = serde_json::to_string(value).expect("output serialises");
    writeln!(out, "{line}").map_err(io_err(Path::new("<stdout>")))
}

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let stdout = Path::new("<stdout>");
    match &cli.command {
        Command::Gen { task, level, count, fixture, out: file } => {
            let instances = match (fixture, task) {
                (Some(name), _) => vec![load_fixture(name)?],
                (None, Some(kind)) => {
                    generate_batch(&table(cli)?, *kind, *level, cli.seed.unwrap_or(0), *count, DEFAULT_MAX_REGEN)?
                }
                (None, None) => {
                    return Err(CliError::Usage(format!(
                        "pass --task or --fixture (one of {})",
                        FIXTURE_NAMES.join(", ")
                    )))
                }
            };
            match file {
                Some(path) => {
                    write_instances(path, &instances)?;
                    writeln!(out, "wrote {} instances to {}", instances.len(), path.display()).map_err(io_err(stdout))?;
                }
                None => {
                    for inst in &instances {
                        emit_line(out, inst)?;
                    }
                }
            }
        }
        Command::Solve { input, mode, trace_out } => {
            let instances = read_instances(input)?;
            let mut trace_file = match trace_out {
                Some(p) => Some(BufWriter::new(File::create(p).map_err(io_err(p))?)),
                None => None,
            };
            for inst in &instances {
                let trace = solve(inst, *mode);
                if let (Some(w), Some(p)) = (trace_file.as_mut(), trace_out) {
                    for event in &trace.events {
                        let line = serde_json::to_string(&TraceLine { id: &inst.id, event }).expect("events serialise");
                        writeln!(w, "{line}").map_err(io_err(p))?;
                    }
                }
                let answer = trace.solution.as_ref().map(|s| render_answer(&inst.payload, s));
                emit_line(
                    out,
                    &SolveLine {
                        id: &inst.id,
                        mode: *mode,
                        solved: trace.succeeded(),
                        explored_count: trace.explored_count,
                        answer,
                    },
                )?;
            }
            if let (Some(mut w), Some(p)) = (trace_file, trace_out) {
                w.flush().map_err(io_err(p))?;
            }
        }
        Command::Render { input, mode, out: dir } => {
            let table = table(cli)?;
            let options = match &cli.config {
                Some(_) => RenderOptions { max_prompt_tokens: load_config(cli)?.max_prompt_tokens },
                None => RenderOptions::default(),
            };
            if let Some(d) = dir {
                std::fs::create_dir_all(d).map_err(io_err(d))?;
            }
            for inst in read_instances(input)? {
                let exemplars = select_exemplars(&inst, *mode, &table)?;
                let bundle = render_with(&inst, *mode, &exemplars, &options)?;
                let text = format!("{}{}", bundle.system_text, bundle.body);
                match dir {
                    Some(d) => {
                        let path = d.join(format!("{}.{}.txt", inst.id, mode.slug()));
                        std::fs::write(&path, text).map_err(io_err(&path))?;
                    }
                    None => {
                        writeln!(out, "===== {} ({}) =====\n{text}", inst.id, mode.slug()).map_err(io_err(stdout))?
                    }
                }
            }
        }
        Command::Run { out: out_dir, cache, dry_run } => {
            let cfg = load_config(cli)?;
            let mut paths = RunPaths::from_config(&cfg);
            if let Some(d) = out_dir {
                paths.out_dir = d.clone();
            }
            if let Some(c) = cache {
                paths.cache = c.clone();
            }
            let instances = pipeline::load_instances(&cfg)?;
            if *dry_run {
                let estimates = pipeline::dry_run(&cfg, &instances)?;
                let (calls, tokens) =
                    estimates.iter().fold((0, 0), |(c, t), e| (c + e.max_calls, t + e.prompt_tokens));
                for e in &estimates {
                    emit_line(out, e)?;
                }
                writeln!(out, "dry run: {} instances, at most {calls} calls, about {tokens} prompt tokens", instances.len())
                    .map_err(io_err(stdout))?;
                return Ok(());
            }
            let summary = pipeline::run(&cfg, &instances, &paths)?;
            for c in &summary.report.cells {
                writeln!(out, "{}\t{}\t{}", c.key.task, c.key.config_label(), format_cell(c.successes, c.total))
                    .map_err(io_err(stdout))?;
            }
            for i in &summary.report.incomplete {
                writeln!(out, "incomplete\t{}\t{}\t{}", i.key.task, i.key.config_label(), i.reason).map_err(io_err(stdout))?;
            }
            let s = summary.gateway;
            writeln!(
                out,
                "{} units run, {} resumed; {} requests, {} cache hits, {} backend calls; report in {}",
                summary.executed,
                summary.resumed,
                s.requests,
                s.cache_hits,
                s.backend_calls,
                paths.out_dir.display()
            )
            .map_err(io_err(stdout))?;
        }
        Command::Verify { input, answers, text, id } => {
            let instances = read_instances(input)?;
            let by_id: HashMap<&str, &ProblemInstance> = instances.iter().map(|i| (i.id.as_str(), i)).collect();
            let find = |id: &str| by_id.get(id).copied().ok_or_else(|| CliError::Usage(format!("no instance `{id}` in {}", input.display())));
            match (answers, text, id) {
                (Some(path), _, _) => {
                    let file = File::open(path).map_err(io_err(path))?;
                    for (no, line) in BufReader::new(file).lines().enumerate() {
                        let line = line.map_err(io_err(path))?;
                        if line.trim().is_empty() {
                            continue;
                        }
                        let a: AnswerLine = serde_json::from_str(&line)
                            .map_err(|e| CliError::Usage(format!("{}:{}: {e}", path.display(), no + 1)))?;
                        let verdict = score(find(&a.id)?, &a.text);
                        emit_line(out, &VerdictLine { id: &a.id, verdict: &verdict })?;
                    }
                }
                (None, Some(text), Some(id)) => {
                    let verdict = score(find(id)?, text);
                    emit_line(out, &VerdictLine { id, verdict: &verdict })?;
                }
                _ => return Err(CliError::Usage("pass --answers, or --text with --id".into())),
            }
        }
        Command::Report { from, out: dir } => {
            let log = pipeline::read_log(from)?;
            let mut report = aggregate(&log, &plan_from_log(&log), None);
            report.run_meta.config = serde_json::json!({ "log": from });
            for p in emit_all(&report, dir)? {
                writeln!(out, "wrote {}", p.display()).map_err(io_err(stdout))?;
            }
        }
        Command::Validate => {
            let cfg = load_config(cli)?;
            let text = toml::to_string(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
            write!(out, "{text}").map_err(io_err(stdout))?;
        }
    }
    Ok(())
}
