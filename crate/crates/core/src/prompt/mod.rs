//! Prompt rendering in three formats: direct in-context pairs, a greedy
//! worked example (CoT) and a depth-first worked example (AoT), plus the
//! self-review follow-up used for sequential refinement.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::render_answer;
use crate::gen::GenError;
use crate::oracle::{SearchMode, SearchTrace};
use crate::scaling::Attempt;
use crate::task::{ProblemInstance, TaskKind};

mod exemplars;
mod statement;
mod trace;

pub use exemplars::{select_exemplars, DIRECT_SHOTS, EXEMPLAR_LEVEL};
pub use statement::{role_line, role_paragraph, statement};

/// Marker that precedes the target statement in every body.
pub const TARGET_MARKER: &str = "### Target Question ###";
pub const DEFAULT_TOKEN_BUDGET: usize = 100_000;
pub const EMPTY_ANSWER_PLACEHOLDER: &str = "no plan was produced";
pub const REFINE_INSTRUCTION: &str = "Review your previous answer carefully. Check it against every constraint \
stated in the original problem. If you find a mistake, correct it; if the answer is already correct, restate it. \
Reply with the complete final answer in the same output format as requested.";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptMode {
    Direct,
    CoT,
    AoT,
}

impl PromptMode {
    pub const ALL: [PromptMode; 3] = [PromptMode::Direct, PromptMode::CoT, PromptMode::AoT];

    pub fn slug(self) -> &'static str {
        match self {
            PromptMode::Direct => "direct",
            PromptMode::CoT => "cot",
            PromptMode::AoT => "aot",
        }
    }

    /// Short label used in plot series, e.g. `AoT`.
    pub fn short(self) -> &'static str {
        match self {
            PromptMode::Direct => "Direct",
            PromptMode::CoT => "CoT",
            PromptMode::AoT => "AoT",
        }
    }

    pub fn column_label(self) -> &'static str {
        match self {
            PromptMode::Direct => "Direct Prompting",
            PromptMode::CoT => "Greedy Search (CoT)",
            PromptMode::AoT => "Depth-First Search (AoT)",
        }
    }

    /// The trace a worked exemplar must carry; None for direct prompting.
    pub fn search_mode(self) -> Option<SearchMode> {
        match self {
            PromptMode::Direct => None,
            PromptMode::CoT => Some(SearchMode::Greedy),
            PromptMode::AoT => Some(SearchMode::Dfs),
        }
    }
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for PromptMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "direct" | "dp" => Ok(PromptMode::Direct),
            "cot" | "greedy" => Ok(PromptMode::CoT),
            "aot" | "dfs" => Ok(PromptMode::AoT),
            other => Err(format!("unknown prompt mode `{other}` (expected direct|cot|aot)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub text: String,
}

impl ChatMessage {
    pub fn new(role: Role, text: impl Into<String>) -> Self {
        ChatMessage { role, text: text.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub mode: PromptMode,
    pub system_text: String,
    pub exemplar_ids: Vec<String>,
    pub shot_count: usize,
    /// The user message to send now.
    pub body: String,
    pub target_id: String,
    /// 0 for the initial prompt, incremented by each refine round.
    #[serde(default)]
    pub refine_round: u32,
    /// Earlier user and assistant turns, oldest first.
    #[serde(default)]
    pub history: Vec<ChatMessage>,
}

impl PromptBundle {
    /// Full conversation: system text, earlier turns, then the body.
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut out = vec![ChatMessage::new(Role::System, &self.system_text)];
        out.extend(self.history.iter().cloned());
        out.push(ChatMessage::new(Role::User, &self.body));
        out
    }
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("{mode} prompting needs a {expected:?} trace but got a {found:?} trace")]
    WrongTraceMode { mode: PromptMode, expected: SearchMode, found: SearchMode },
    #[error("exemplar {0} has a trace that does not end in success")]
    TraceNotSuccessful(String),
    #[error("prompt needs about {estimated} tokens after truncation, budget is {budget}")]
    ContextBudgetExceeded { estimated: usize, budget: usize },
    #[error("{mode} prompting needs {expected} exemplar(s), got {found}")]
    ExemplarCount { mode: PromptMode, expected: String, found: usize },
    #[error("exemplar {id} is a {found} instance, target is {expected}")]
    ExemplarKind { id: String, expected: TaskKind, found: TaskKind },
    #[error("target {0} is also an exemplar")]
    TargetAmongExemplars(String),
    #[error("could not build exemplars: {0}")]
    Exemplar(#[from] GenError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenderOptions {
    /// Estimated-token ceiling for the body; None disables the check.
    pub max_prompt_tokens: Option<usize>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { max_prompt_tokens: Some(DEFAULT_TOKEN_BUDGET) }
    }
}

/// Rough token count: four characters per token.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count().div_ceil(4)
}

pub fn render(
    instance: &ProblemInstance,
    mode: PromptMode,
    exemplars: &[(ProblemInstance, SearchTrace)],
) -> Result<PromptBundle, PromptError> {
    render_with(instance, mode, exemplars, &RenderOptions::default())
}

pub fn render_with(
    instance: &ProblemInstance,
    mode: PromptMode,
    exemplars: &[(ProblemInstance, SearchTrace)],
    options: &RenderOptions,
) -> Result<PromptBundle, PromptError> {
    for (ex, _) in exemplars {
        if ex.id == instance.id {
            return Err(PromptError::TargetAmongExemplars(ex.id.clone()));
        }
        if ex.kind != instance.kind {
            return Err(PromptError::ExemplarKind { id: ex.id.clone(), expected: instance.kind, found: ex.kind });
        }
    }
    let head = format!("**Problem Description:**\n\n{}\n\n", role_paragraph(instance.kind));
    let tail = format!("**Question:**\n\n{TARGET_MARKER}\n{}\n", statement(&instance.payload));
    let fits = |body: &str| match options.max_prompt_tokens {
        Some(budget) if estimate_tokens(body) > budget => Err(PromptError::ContextBudgetExceeded {
            estimated: estimate_tokens(body),
            budget,
        }),
        _ => Ok(()),
    };
    let body = match mode.search_mode() {
        None => {
            if exemplars.is_empty() {
                return Err(PromptError::ExemplarCount { mode, expected: "at least 1".into(), found: 0 });
            }
            let mut body = head;
            body.push_str(&format!("**{}-Shot In-Context Examples:**\n\n", exemplars.len()));
            for (i, (ex, _)) in exemplars.iter().enumerate() {
                body.push_str(&format!(
                    "### Task{n} ###\n{}\n\n### Solution{n} ###\n{}\n\n",
                    statement(&ex.payload),
                    render_answer(&ex.payload, &ex.ground_truth),
                    n = i + 1
                ));
            }
            body.push_str(&tail);
            fits(&body)?;
            body
        }
        Some(expected) => {
            let [(ex, tr)] = exemplars else {
                return Err(PromptError::ExemplarCount { mode, expected: "exactly 1".into(), found: exemplars.len() });
            };
            if tr.mode != expected {
                return Err(PromptError::WrongTraceMode { mode, expected, found: tr.mode });
            }
            if !tr.succeeded() {
                return Err(PromptError::TraceNotSuccessful(ex.id.clone()));
            }
            let frame = |keep: &[bool]| {
                format!(
                    "{head}{}\n\n{}\n{}\n{tail}",
                    trace::thinking_header(expected),
                    statement::objective_and_constraints(&ex.payload),
                    trace::render_thinking(ex, tr, keep)
                )
            };
            let dist = trace::path_distance(tr);
            let mut cut = dist.iter().copied().max().unwrap_or(0) + 1;
            loop {
                let keep: Vec<bool> = dist.iter().map(|&d| d < cut).collect();
                let body = frame(&keep);
                match fits(&body) {
                    Ok(()) => {
                        if keep.iter().any(|k| !k) {
                            log::info!("truncated exemplar {} to path distance < {cut}", ex.id);
                        }
                        break body;
                    }
                    Err(e) if cut <= 1 => return Err(e),
                    Err(_) => cut -= 1,
                }
            }
        }
    };
    Ok(PromptBundle {
        mode,
        system_text: role_line(instance.kind).to_string(),
        exemplar_ids: exemplars.iter().map(|(e, _)| e.id.clone()).collect(),
        shot_count: exemplars.len(),
        body,
        target_id: instance.id.clone(),
        refine_round: 0,
        history: Vec::new(),
    })
}

/// Follow-up turn asking the model to review its own answer. Only the
/// previous response is quoted; the verdict is never revealed.
pub fn render_refine(current: &PromptBundle, previous: &Attempt) -> PromptBundle {
    let answer = if previous.raw_response.trim().is_empty() {
        EMPTY_ANSWER_PLACEHOLDER
    } else {
        previous.raw_response.as_str()
    };
    let body = format!("Here is your previous answer:\n\n<previous_answer>\n{answer}\n</previous_answer>\n\n{REFINE_INSTRUCTION}\n");
    let mut history = current.history.clone();
    history.push(ChatMessage::new(Role::User, &current.body));
    history.push(ChatMessage::new(Role::Assistant, previous.raw_response.as_str()));
    PromptBundle {
        body,
        history,
        refine_round: current.refine_round + 1,
        ..current.clone()
    }
}
