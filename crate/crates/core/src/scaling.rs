//! Test-time scaling strategies as policies over gateway calls: a single
//! sample, best-of-N, self-refinement rounds, and thinking mode.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{parse_answer, verify};
use crate::gateway::{canonical_digest, BackendRequest, BackendResponse, Gateway, GatewayError, TokenCounts};
use crate::prompt::{render_refine, PromptBundle, PromptMode};
use crate::task::{ProblemInstance, Solution, Verdict};

pub const DEFAULT_PARALLEL_N: u32 = 3;
pub const DEFAULT_REFINE_ROUNDS: u32 = 1;
pub const PARALLEL_TEMPERATURE: f64 = 0.7;
pub const BASE_TEMPERATURE: f64 = 0.0;
pub const DEFAULT_MAX_OUTPUT_TOKENS: u32 = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum ScalingStrategy {
    NoScaling,
    Parallel { n: u32 },
    Sequential { rounds: u32 },
    /// Thinking mode; `budget` of `None` leaves the budget to the backend.
    Internal { budget: Option<u32> },
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ScalingError {
    #[error("invalid strategy `{0}`: expected ws, ps:<n>, ss:<rounds> or is[:<tokens>]")]
    Syntax(String),
    #[error("invalid strategy: {0}")]
    Invalid(String),
    #[error("prompt targets {bundle} but the instance is {instance}")]
    TargetMismatch { bundle: String, instance: String },
}

impl ScalingStrategy {
    /// The four strategies of the default grid, in row order.
    pub const DEFAULTS: [ScalingStrategy; 4] = [
        ScalingStrategy::NoScaling,
        ScalingStrategy::Parallel { n: DEFAULT_PARALLEL_N },
        ScalingStrategy::Sequential { rounds: DEFAULT_REFINE_ROUNDS },
        ScalingStrategy::Internal { budget: None },
    ];

    /// Family slug without parameters.
    pub fn slug(self) -> &'static str {
        match self {
            ScalingStrategy::NoScaling => "ws",
            ScalingStrategy::Parallel { .. } => "ps",
            ScalingStrategy::Sequential { .. } => "ss",
            ScalingStrategy::Internal { .. } => "is",
        }
    }

    pub fn row_label(self) -> &'static str {
        match self {
            ScalingStrategy::NoScaling => "No Scaling (Base Model)",
            ScalingStrategy::Parallel { .. } => "Parallel Scaling (Best-of-N)",
            ScalingStrategy::Sequential { .. } => "Sequential Scaling (Self-Refine)",
            ScalingStrategy::Internal { .. } => "Internal Scaling (Thinking Mode)",
        }
    }

    pub fn uses_thinking(self) -> bool {
        matches!(self, ScalingStrategy::Internal { .. })
    }

    pub fn validate(self) -> Result<(), ScalingError> {
        match self {
            ScalingStrategy::Parallel { n } if n < 2 => {
                Err(ScalingError::Invalid(format!("parallel scaling needs at least 2 samples, got {n}")))
            }
            ScalingStrategy::Sequential { rounds: 0 } => {
                Err(ScalingError::Invalid("sequential scaling needs at least 1 refine round".into()))
            }
            ScalingStrategy::Internal { budget: Some(0) } => {
                Err(ScalingError::Invalid("thinking budget must be positive".into()))
            }
            _ => Ok(()),
        }
    }
}

impl fmt::Display for ScalingStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalingStrategy::NoScaling => write!(f, "ws"),
            ScalingStrategy::Parallel { n } => write!(f, "ps:{n}"),
            ScalingStrategy::Sequential { rounds } => write!(f, "ss:{rounds}"),
            ScalingStrategy::Internal { budget: None } => write!(f, "is"),
            ScalingStrategy::Internal { budget: Some(t) } => write!(f, "is:{t}"),
        }
    }
}

impl FromStr for ScalingStrategy {
    type Err = ScalingError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let syntax = || ScalingError::Syntax(s.to_string());
        let (head, arg) = match s.trim().split_once(':') {
            Some((h, a)) => (h, Some(a.trim().parse::<u32>().map_err(|_| syntax())?)),
            None => (s.trim(), None),
        };
        let strategy = match (head.to_ascii_lowercase().as_str(), arg) {
            ("ws", None) => ScalingStrategy::NoScaling,
            ("ps", n) => ScalingStrategy::Parallel { n: n.unwrap_or(DEFAULT_PARALLEL_N) },
            ("ss", r) => ScalingStrategy::Sequential { rounds: r.unwrap_or(DEFAULT_REFINE_ROUNDS) },
            ("is", t) => ScalingStrategy::Internal { budget: t },
            _ => return Err(syntax()),
        };
        strategy.validate()?;
        Ok(strategy)
    }
}

impl TryFrom<String> for ScalingStrategy {
    type Error = ScalingError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<ScalingStrategy> for String {
    fn from(s: ScalingStrategy) -> String {
        s.to_string()
    }
}

/// The 3 x 4 grid of prompt formats and strategies, grouped by format.
pub fn default_matrix() -> Vec<(PromptMode, ScalingStrategy)> {
    PromptMode::ALL
        .iter()
        .flat_map(|&m| ScalingStrategy::DEFAULTS.iter().map(move |&s| (m, s)))
        .collect()
}

/// How best-of-N picks its final verdict.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Success if any sample verifies.
    #[default]
    AnyCorrect,
    /// The most common parsed answer wins; ties go to the earliest sample.
    MajorityVote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecOptions {
    pub model_name: String,
    pub max_output_tokens: u32,
    pub parallel_temperature: f64,
    pub base_temperature: f64,
    pub selection: Selection,
    /// Upper bound applied to any thinking budget.
    pub thinking_cap: Option<u32>,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions {
            model_name: "default".into(),
            max_output_tokens: DEFAULT_MAX_OUTPUT_TOKENS,
            parallel_temperature: PARALLEL_TEMPERATURE,
            base_temperature: BASE_TEMPERATURE,
            selection: Selection::AnyCorrect,
            thinking_cap: None,
        }
    }
}

/// One backend call and its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attempt {
    pub request_digest: String,
    pub raw_response: String,
    #[serde(default)]
    pub thinking_text: Option<String>,
    /// The parsed candidate; `None` exactly when the verdict is a parse
    /// failure or the call itself failed.
    pub parsed: Option<Solution>,
    pub verdict: Verdict,
    pub round_index: u32,
    pub sample_index: u32,
    pub thinking: bool,
    pub temperature: f64,
    #[serde(default)]
    pub token_counts: TokenCounts,
}

impl Attempt {
    pub fn is_backend_error(&self) -> bool {
        matches!(self.verdict, Verdict::BackendError(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub final_verdict: Verdict,
    /// Every call made, in issue order.
    pub attempts: Vec<Attempt>,
    /// Some best-of-N samples failed at the transport level; the final
    /// verdict covers only the ones that completed.
    pub partial_parallel: bool,
}

fn judge(
    instance: &ProblemInstance,
    req: &BackendRequest,
    result: Result<BackendResponse, GatewayError>,
    round_index: u32,
    sample_index: u32,
) -> Attempt {
    let request_digest = canonical_digest(req);
    let base = |raw_response: String, thinking_text, parsed, verdict, token_counts| Attempt {
        request_digest: request_digest.clone(),
        raw_response,
        thinking_text,
        parsed,
        verdict,
        round_index,
        sample_index,
        thinking: req.thinking,
        temperature: req.temperature,
        token_counts,
    };
    match result {
        Err(e) => base(String::new(), None, None, Verdict::BackendError(e.to_string()), TokenCounts::default()),
        Ok(resp) => {
            let report = parse_answer(instance, &resp.text);
            let verdict = match &report.candidate {
                Some(c) => verify(instance, c).unwrap_or_else(|e| Verdict::ParseFailure(e.to_string())),
                None => Verdict::ParseFailure(report.failure_reason.clone().unwrap_or_default()),
            };
            let parsed = if matches!(verdict, Verdict::ParseFailure(_)) { None } else { report.candidate };
            base(resp.text, resp.thinking_text, parsed, verdict, resp.token_counts)
        }
    }
}

struct Caller<'a> {
    instance: &'a ProblemInstance,
    gateway: &'a Gateway,
    opts: &'a ExecOptions,
}

impl Caller<'_> {
    fn call(&self, bundle: &PromptBundle, thinking: Option<Option<u32>>, temperature: f64, round: u32, sample: u32) -> Attempt {
        let budget = thinking.flatten();
        let budget = match (budget, self.opts.thinking_cap) {
            (Some(b), Some(c)) => Some(b.min(c)),
            (b, c) if thinking.is_some() => b.or(c),
            _ => None,
        };
        let req = BackendRequest {
            model_name: self.opts.model_name.clone(),
            messages: bundle.messages(),
            temperature,
            max_output_tokens: self.opts.max_output_tokens,
            thinking: thinking.is_some(),
            thinking_budget: budget,
            sample_key: sample,
        };
        let result = self.gateway.complete(&req);
        judge(self.instance, &req, result, round, sample)
    }
}

fn select(attempts: &[Attempt], selection: Selection) -> (Verdict, bool) {
    let done: Vec<&Attempt> = attempts.iter().filter(|a| !a.is_backend_error()).collect();
    let partial = done.len() < attempts.len();
    let Some(first) = done.first() else {
        return (attempts[0].verdict.clone(), partial);
    };
    let verdict = match selection {
        Selection::AnyCorrect => {
            done.iter().find(|a| a.verdict.is_success()).map_or_else(|| first.verdict.clone(), |a| a.verdict.clone())
        }
        Selection::MajorityVote => {
            let mut tally: HashMap<String, (usize, usize)> = HashMap::new();
            for (i, a) in done.iter().enumerate() {
                if let Some(p) = &a.parsed {
                    let key = serde_json::to_string(p).expect("solutions serialise");
                    tally.entry(key).or_insert((0, i)).0 += 1;
                }
            }
            tally
                .values()
                .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))
                .map_or_else(|| first.verdict.clone(), |&(_, i)| done[i].verdict.clone())
        }
    };
    (verdict, partial)
}

/// Runs `strategy` for one instance. Backend failures become
/// `BackendError` attempts; only malformed inputs are errors.
pub fn execute(
    instance: &ProblemInstance,
    bundle: &PromptBundle,
    strategy: ScalingStrategy,
    gateway: &Gateway,
    opts: &ExecOptions,
) -> Result<Execution, ScalingError> {
    strategy.validate()?;
    if bundle.target_id != instance.id {
        return Err(ScalingError::TargetMismatch { bundle: bundle.target_id.clone(), instance: instance.id.clone() });
    }
    let caller = Caller { instance, gateway, opts };
    let base_t = opts.base_temperature;
    let execution = match strategy {
        ScalingStrategy::NoScaling => {
            let a = caller.call(bundle, None, base_t, 0, 0);
            Execution { final_verdict: a.verdict.clone(), attempts: vec![a], partial_parallel: false }
        }
        ScalingStrategy::Parallel { n } => {
            let attempts: Vec<Attempt> = std::thread::scope(|s| {
                let handles: Vec<_> = (0..n)
                    .map(|i| {
                        let caller = &caller;
                        s.spawn(move || caller.call(bundle, None, opts.parallel_temperature, 0, i))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("sample thread panicked")).collect()
            });
            let (final_verdict, partial_parallel) = select(&attempts, opts.selection);
            if partial_parallel {
                log::warn!("{}: only some best-of-{n} samples completed", instance.id);
            }
            Execution { final_verdict, attempts, partial_parallel }
        }
        ScalingStrategy::Sequential { rounds } => {
            let mut current = bundle.clone();
            let mut attempts = vec![caller.call(&current, None, base_t, 0, 0)];
            for round in 1..=rounds {
                let last = attempts.last().expect("at least one attempt");
                if last.verdict.is_success() || last.is_backend_error() {
                    break;
                }
                current = render_refine(&current, last);
                attempts.push(caller.call(&current, None, base_t, round, 0));
            }
            let final_verdict = attempts.last().expect("at least one attempt").verdict.clone();
            Execution { final_verdict, attempts, partial_parallel: false }
        }
        ScalingStrategy::Internal { budget } => {
            let a = caller.call(bundle, Some(budget), base_t, 0, 0);
            Execution { final_verdict: a.verdict.clone(), attempts: vec![a], partial_parallel: false }
        }
    };
    Ok(execution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::render_answer;
    use crate::gateway::MockBackend;
    use crate::gen::load_fixture;
    use crate::prompt::{render, select_exemplars};

    fn setup(mode: PromptMode) -> (ProblemInstance, PromptBundle) {
        let inst = load_fixture("appendixB-task1").unwrap();
        let exemplars = select_exemplars(&inst, mode, &crate::gen::DifficultyTable::default()).unwrap();
        let bundle = render(&inst, mode, &exemplars).unwrap();
        (inst, bundle)
    }

    fn right(inst: &ProblemInstance) -> Result<BackendResponse, GatewayError> {
        Ok(BackendResponse::text(render_answer(&inst.payload, &inst.ground_truth)))
    }

    fn wrong() -> Result<BackendResponse, GatewayError> {
        Ok(BackendResponse::text("I am not sure."))
    }

    #[test]
    fn strategy_spelling() {
        for (text, s) in [
            ("ws", ScalingStrategy::NoScaling),
            ("ps", ScalingStrategy::Parallel { n: 3 }),
            ("ps:5", ScalingStrategy::Parallel { n: 5 }),
            ("ss", ScalingStrategy::Sequential { rounds: 1 }),
            ("ss:2", ScalingStrategy::Sequential { rounds: 2 }),
            ("is", ScalingStrategy::Internal { budget: None }),
            ("is:4096", ScalingStrategy::Internal { budget: Some(4096) }),
        ] {
            assert_eq!(text.parse::<ScalingStrategy>().unwrap(), s);
            assert_eq!(s.to_string().parse::<ScalingStrategy>().unwrap(), s);
        }
        for bad in ["ps:1", "ss:0", "xs", "ws:2", "is:abc", "is:0"] {
            assert!(bad.parse::<ScalingStrategy>().is_err(), "{bad}");
        }
    }

    #[test]
    fn default_matrix_is_three_by_four() {
        let m = default_matrix();
        assert_eq!(m.len(), 12);
        assert_eq!(m[1], (PromptMode::Direct, ScalingStrategy::Parallel { n: 3 }));
        assert!(m[3].1.uses_thinking());
        assert_eq!(m[11], (PromptMode::AoT, ScalingStrategy::Internal { budget: None }));
    }

    #[test]
    fn parallel_any_correct() {
        let (inst, bundle) = setup(PromptMode::Direct);
        let ok = right(&inst);
        let gw = Gateway::new(Box::new(MockBackend::from_fn(move |req, _| {
            if req.sample_key == 1 { ok.clone() } else { wrong() }
        })));
        let ex = execute(&inst, &bundle, ScalingStrategy::Parallel { n: 3 }, &gw, &ExecOptions::default()).unwrap();
        assert_eq!(ex.attempts.len(), 3);
        assert!(ex.final_verdict.is_success());
        assert!(ex.attempts.iter().all(|a| !a.thinking && a.temperature == PARALLEL_TEMPERATURE));
        let digests: std::collections::HashSet<_> = ex.attempts.iter().map(|a| &a.request_digest).collect();
        assert_eq!(digests.len(), 3);
    }

    #[test]
    fn majority_vote_follows_the_crowd() {
        let (inst, bundle) = setup(PromptMode::Direct);
        let mut other = inst.clone();
        let crate::task::Solution::TripPlan(legs) = &mut other.ground_truth else { unreachable!() };
        legs.reverse();
        let bad = render_answer(&inst.payload, &other.ground_truth);
        let ok = right(&inst);
        let gw = Gateway::new(Box::new(MockBackend::from_fn(move |req, _| {
            if req.sample_key == 0 { ok.clone() } else { Ok(BackendResponse::text(bad.clone())) }
        })));
        let opts = ExecOptions { selection: Selection::MajorityVote, ..ExecOptions::default() };
        let ex = execute(&inst, &bundle, ScalingStrategy::Parallel { n: 3 }, &gw, &opts).unwrap();
        assert!(!ex.final_verdict.is_success());
    }

    #[test]
    fn partial_parallel_is_flagged() {
        let (inst, bundle) = setup(PromptMode::Direct);
        let ok = right(&inst);
        let gw = Gateway::new(Box::new(MockBackend::from_fn(move |req, _| {
            if req.sample_key == 2 { ok.clone() } else { Err(GatewayError::Auth("nope".into())) }
        })));
        let ex = execute(&inst, &bundle, ScalingStrategy::Parallel { n: 3 }, &gw, &ExecOptions::default()).unwrap();
        assert!(ex.partial_parallel);
        assert!(ex.final_verdict.is_success());
        assert_eq!(ex.attempts.iter().filter(|a| a.is_backend_error()).count(), 2);
    }

    #[test]
    fn sequential_stops_early_on_success() {
        let (inst, bundle) = setup(PromptMode::CoT);
        let gw = Gateway::new(Box::new(MockBackend::scripted(vec![right(&inst)])));
        let ex = execute(&inst, &bundle, ScalingStrategy::Sequential { rounds: 1 }, &gw, &ExecOptions::default()).unwrap();
        assert_eq!(ex.attempts.len(), 1);
        assert!(ex.final_verdict.is_success());
    }

    #[test]
    fn sequential_refines_after_a_miss() {
        let (inst, bundle) = setup(PromptMode::CoT);
        let mock = MockBackend::scripted(vec![wrong(), right(&inst)]);
        let gw = Gateway::new(Box::new(mock));
        let ex = execute(&inst, &bundle, ScalingStrategy::Sequential { rounds: 3 }, &gw, &ExecOptions::default()).unwrap();
        assert_eq!(ex.attempts.len(), 2);
        assert_eq!(ex.attempts[1].round_index, 1);
        assert_eq!(ex.final_verdict, ex.attempts[1].verdict);
        assert!(ex.final_verdict.is_success());
    }

    #[test]
    fn internal_turns_thinking_on_and_reports_missing_support() {
        let (inst, bundle) = setup(PromptMode::AoT);
        let gw = Gateway::new(Box::new(MockBackend::scripted(vec![right(&inst)]).with_thinking(true)));
        let s = ScalingStrategy::Internal { budget: Some(2048) };
        let ex = execute(&inst, &bundle, s, &gw, &ExecOptions::default()).unwrap();
        assert!(ex.attempts[0].thinking);
        assert!(ex.final_verdict.is_success());

        let plain = Gateway::new(Box::new(MockBackend::scripted(vec![right(&inst)])));
        let ex = execute(&inst, &bundle, s, &plain, &ExecOptions::default()).unwrap();
        assert!(matches!(ex.final_verdict, Verdict::BackendError(_)));
        assert!(ex.attempts[0].parsed.is_none());
    }

    #[test]
    fn mismatched_bundle_is_rejected() {
        let (mut inst, bundle) = setup(PromptMode::Direct);
        inst.id = "other".into();
        let gw = Gateway::new(Box::new(MockBackend::constant("")));
        assert!(matches!(
            execute(&inst, &bundle, ScalingStrategy::NoScaling, &gw, &ExecOptions::default()),
            Err(ScalingError::TargetMismatch { .. })
        ));
    }
}
