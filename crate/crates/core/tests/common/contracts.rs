//! Strategy contracts over randomized simulated backends: best-of-N is an
//! any-correct disjunction and monotone in N, self-refinement stops at the
//! first success, and thinking is on exactly for internal scaling.

use std::sync::{Arc, OnceLock};

use proptest::prelude::*;
use reasonbench::eval::render_answer;
use reasonbench::gateway::{canonical_digest, BackendResponse, Gateway, GatewayError, MockBackend, RetryPolicy};
use reasonbench::gen::{generate, DifficultyTable, GenSpec};
use reasonbench::prompt::{render, select_exemplars, PromptBundle, PromptMode};
use reasonbench::scaling::{execute, ExecOptions, Execution, ScalingStrategy};
use reasonbench::task::{ProblemInstance, TaskKind, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Right,
    Wrong,
    Garbled,
    Down,
}

pub fn outcome() -> impl Strategy<Value = Outcome> {
    prop_oneof![Just(Outcome::Right), Just(Outcome::Wrong), Just(Outcome::Garbled), Just(Outcome::Down)]
}

struct Case {
    inst: ProblemInstance,
    bundle: PromptBundle,
    right: String,
    wrong: String,
}

fn cases() -> &'static [Case] {
    static CASES: OnceLock<Vec<Case>> = OnceLock::new();
    CASES.get_or_init(|| {
        let table = DifficultyTable::default();
        TaskKind::ALL
            .into_iter()
            .map(|kind| {
                let inst = generate(&GenSpec::new(kind, 5, 11)).unwrap();
                let other = generate(&GenSpec::new(kind, 5, 12)).unwrap();
                let ex = select_exemplars(&inst, PromptMode::Direct, &table).unwrap();
                let bundle = render(&inst, PromptMode::Direct, &ex).unwrap();
                let wrong = render_answer(&other.payload, &other.ground_truth);
                assert!(!reasonbench::eval::score(&inst, &wrong).is_success(), "{kind:?}: wrong answer verifies");
                Case { right: render_answer(&inst.payload, &inst.ground_truth), wrong, inst, bundle }
            })
            .collect()
    })
}

/// A backend whose reply to call `i` of a conversation position is
/// `script[i]`. Parallel samples index by sample key, refine rounds by
/// conversation length.
fn scripted(case: &Case, script: Vec<Outcome>, by_round: bool, thinking: bool) -> (Gateway, Arc<MockBackend>) {
    let (right, wrong) = (case.right.clone(), case.wrong.clone());
    let mock = Arc::new(
        MockBackend::from_fn(move |req, _| {
            let i = if by_round { (req.messages.len() - 2) / 2 } else { req.sample_key as usize };
            match script[i.min(script.len() - 1)] {
                Outcome::Right => Ok(BackendResponse::text(right.clone())),
                Outcome::Wrong => Ok(BackendResponse::text(wrong.clone())),
                Outcome::Garbled => Ok(BackendResponse::text("let me think about this differently")),
                Outcome::Down => Err(GatewayError::Rejected("simulated outage".into())),
            }
        })
        .with_thinking(thinking),
    );
    struct Shared(Arc<MockBackend>);
    impl reasonbench::gateway::Backend for Shared {
        fn name(&self) -> &str {
            self.0.name()
        }
        fn supports_thinking(&self) -> bool {
            self.0.supports_thinking()
        }
        fn call(&self, req: &reasonbench::gateway::BackendRequest) -> Result<BackendResponse, GatewayError> {
            self.0.call(req)
        }
    }
    let gw = Gateway::new(Box::new(Shared(mock.clone()))).with_retry(RetryPolicy { attempts: 1, ..RetryPolicy::default() });
    (gw, mock)
}

fn run(case: &Case, strategy: ScalingStrategy, gw: &Gateway) -> Execution {
    execute(&case.inst, &case.bundle, strategy, gw, &ExecOptions::default()).unwrap()
}

/// Per-attempt invariants. The thinking flag matches the strategy on every attempt and on every request
/// the backend actually saw, matched by digest.
fn check_thinking(ex: &Execution, mock: &MockBackend, strategy: ScalingStrategy) -> Result<(), TestCaseError> {
    let seen: Vec<_> = mock.calls();
    prop_assert_eq!(seen.len(), ex.attempts.len());
    for a in &ex.attempts {
        prop_assert_eq!(a.thinking, strategy.uses_thinking());
        let req = seen.iter().find(|r| canonical_digest(r) == a.request_digest);
        prop_assert!(req.is_some(), "attempt digest matches no recorded request");
        prop_assert_eq!(req.unwrap().thinking, strategy.uses_thinking());
        // a parsed candidate exactly when the reply did not fail to parse;
        // failed calls carry neither
        let parse_failed = matches!(a.verdict, Verdict::ParseFailure(_));
        if a.is_backend_error() {
            prop_assert!(a.parsed.is_none());
        } else {
            prop_assert_eq!(a.parsed.is_some(), !parse_failed);
        }
    }
    Ok(())
}

/// One randomized contract check. `family` picks no scaling, best-of-N,
/// self-refinement or internal scaling.
pub fn check_case(which: usize, family: usize, script: Vec<Outcome>, extra: Outcome) -> Result<(), TestCaseError> {
    let case = &cases()[which];
    match family {
        0 => {
            let s = ScalingStrategy::NoScaling;
            let (gw, mock) = scripted(case, script.clone(), false, false);
            let ex = run(case, s, &gw);
            prop_assert_eq!(ex.attempts.len(), 1);
            prop_assert_eq!(&ex.final_verdict, &ex.attempts[0].verdict);
            check_thinking(&ex, &mock, s)?;
        }
        1 => {
            let n = (script.len() as u32).max(2);
            let s = ScalingStrategy::Parallel { n };
            let (gw, mock) = scripted(case, script.clone(), false, false);
            let ex = run(case, s, &gw);
            prop_assert_eq!(ex.attempts.len() as u32, n);
            let any = ex.attempts.iter().any(|a| a.verdict.is_success());
            prop_assert_eq!(ex.final_verdict.is_success(), any);
            prop_assert_eq!(ex.partial_parallel, ex.attempts.iter().any(|a| a.is_backend_error()));
            if ex.attempts.iter().all(|a| a.is_backend_error()) {
                prop_assert!(matches!(ex.final_verdict, Verdict::BackendError(_)));
            }
            check_thinking(&ex, &mock, s)?;
            // one more sample never turns a success into a failure
            let mut longer: Vec<Outcome> = (0..n as usize).map(|i| script[i.min(script.len() - 1)]).collect();
            longer.push(extra);
            let (gw2, _) = scripted(case, longer, false, false);
            let ex2 = run(case, ScalingStrategy::Parallel { n: n + 1 }, &gw2);
            prop_assert!(!ex.final_verdict.is_success() || ex2.final_verdict.is_success());
        }
        2 => {
            let rounds = script.len() as u32;
            let s = ScalingStrategy::Sequential { rounds };
            let (gw, mock) = scripted(case, script.clone(), true, false);
            let ex = run(case, s, &gw);
            prop_assert!(ex.attempts.len() as u32 <= rounds + 1);
            prop_assert_eq!(&ex.final_verdict, &ex.attempts.last().unwrap().verdict);
            for (i, a) in ex.attempts.iter().enumerate() {
                prop_assert_eq!(a.round_index as usize, i);
                let last = i + 1 == ex.attempts.len();
                prop_assert!(last || !a.verdict.is_success(), "call made after a success");
            }
            let first_stop = script.iter().position(|o| matches!(o, Outcome::Right | Outcome::Down));
            let expected = first_stop.map_or(script.len() + 1, |p| p + 1).min(rounds as usize + 1);
            prop_assert_eq!(ex.attempts.len(), expected);
            check_thinking(&ex, &mock, s)?;
        }
        _ => {
            let s = ScalingStrategy::Internal { budget: Some(1024 * script.len() as u32) };
            let capable = extra != Outcome::Down;
            let (gw, mock) = scripted(case, script.clone(), false, capable);
            let ex = run(case, s, &gw);
            prop_assert_eq!(ex.attempts.len(), 1);
            if capable {
                check_thinking(&ex, &mock, s)?;
                prop_assert_eq!(mock.calls()[0].thinking_budget, Some(1024 * script.len() as u32));
            } else {
                prop_assert!(matches!(ex.final_verdict, Verdict::BackendError(_)));
                prop_assert!(mock.calls().is_empty());
            }
        }
    }
    Ok(())
}

fn inputs() -> impl Strategy<Value = (usize, usize, Vec<Outcome>, Outcome)> {
    (0usize..4, 0usize..4, prop::collection::vec(outcome(), 1..7), outcome())
}

/// Runs `cases` random checks with a fixed seed; the error is the minimal
/// failing input.
pub fn run_contracts(cases: u32) -> Result<(), String> {
    let config = ProptestConfig { cases, failure_persistence: None, ..ProptestConfig::default() };
    let mut runner = proptest::test_runner::TestRunner::new_with_rng(
        config,
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    runner
        .run(&inputs(), |(which, family, script, extra)| check_case(which, family, script, extra))
        .map_err(|e| e.to_string())
}
