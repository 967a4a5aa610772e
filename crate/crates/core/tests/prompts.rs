//! Prompt rendering: golden bodies, format distinctions, leakage and the
//! self-refine turn. Set `REASONBENCH_BLESS=1` to rewrite the goldens.

use std::path::PathBuf;

use reasonbench::eval::render_answer;
use reasonbench::gateway::TokenCounts;
use reasonbench::gen::{generate, load_fixture, DifficultyTable, GenSpec};
use reasonbench::oracle::{solve, SearchMode};
use reasonbench::prompt::{
    render, render_refine, render_with, select_exemplars, PromptError, PromptMode, RenderOptions, Role,
    EMPTY_ANSWER_PLACEHOLDER, REFINE_INSTRUCTION, TARGET_MARKER,
};
use reasonbench::scaling::Attempt;
use reasonbench::task::{ProblemInstance, Solution, TaskKind, Verdict};

const FIXTURE: &str = "appendixB-task1";
/// Seed of the level-10 trip that the worked-example goldens target.
const GOLDEN_TARGET_SEED: u64 = 2025;

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs/prompt-formats")
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_dir().join(name);
    if std::env::var_os("REASONBENCH_BLESS").is_some() {
        std::fs::create_dir_all(golden_dir()).unwrap();
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    if expected != actual {
        let line = expected.lines().zip(actual.lines()).position(|(a, b)| a != b).unwrap_or(0);
        panic!(
            "{name} differs from the golden file at line {}:\n  golden: {:?}\n  actual: {:?}",
            line + 1,
            expected.lines().nth(line),
            actual.lines().nth(line)
        );
    }
}

fn target() -> ProblemInstance {
    generate(&GenSpec::new(TaskKind::TripPlanning, 10, GOLDEN_TARGET_SEED)).unwrap()
}

fn bundle_for(inst: &ProblemInstance, mode: PromptMode) -> reasonbench::prompt::PromptBundle {
    let ex = select_exemplars(inst, mode, &DifficultyTable::default()).unwrap();
    render(inst, mode, &ex).unwrap()
}

#[test]
fn fixture_prompts_match_goldens() {
    let fixture = load_fixture(FIXTURE).unwrap();
    let direct = bundle_for(&fixture, PromptMode::Direct);
    assert_eq!(direct.shot_count, 5);
    check_golden("direct.txt", &direct.body);

    let t = target();
    for (mode, name) in [(PromptMode::CoT, "cot.txt"), (PromptMode::AoT, "aot.txt")] {
        let b = bundle_for(&t, mode);
        assert_eq!(b.exemplar_ids, vec![fixture.id.clone()], "{mode}: the fixture is the worked example");
        check_golden(name, &b.body);
    }
}

#[test]
fn direct_bodies_pair_tasks_with_solutions() {
    let fixture = load_fixture(FIXTURE).unwrap();
    let b = bundle_for(&fixture, PromptMode::Direct);
    for i in 1..=5 {
        assert!(b.body.contains(&format!("### Task{i} ###")), "Task{i}");
        assert!(b.body.contains(&format!("### Solution{i} ###")), "Solution{i}");
    }
    assert!(!b.body.contains("### Task6 ###"));
    assert!(!b.body.contains("Prune"));
    assert!(!b.exemplar_ids.contains(&b.target_id));
}

#[test]
fn aot_prunes_and_cot_does_not() {
    let t = target();
    let aot = bundle_for(&t, PromptMode::AoT);
    let cot = bundle_for(&t, PromptMode::CoT);
    assert!(aot.body.lines().any(|l| l.contains("Prune")), "AoT body has no Prune line");
    assert_eq!(cot.body.lines().filter(|l| l.contains("Prune")).count(), 0);
    assert!(aot.body.contains("No child of the Riga root survives"));
    assert!(aot.body.contains("Unique solution path found"));
    for field in ["Step:", "Transition tried:", "Calendar preview & test:", "Outcome:"] {
        assert!(aot.body.contains(field), "AoT step schema lacks {field}");
    }
    assert!(cot.body.contains("Greedy Search"));
    assert!(aot.body.contains("Depth-First Search"));
}

#[test]
fn bodies_never_leak_the_target_answer() {
    let table = DifficultyTable::default();
    for kind in TaskKind::ALL {
        for seed in 0..6 {
            let inst = generate(&GenSpec::new(kind, 8, 900 + seed)).unwrap();
            let answer = render_answer(&inst.payload, &inst.ground_truth);
            for mode in PromptMode::ALL {
                let ex = select_exemplars(&inst, mode, &table).unwrap();
                let b = render(&inst, mode, &ex).unwrap();
                assert!(!b.exemplar_ids.contains(&inst.id));
                let target_part = b.body.split(TARGET_MARKER).nth(1).unwrap();
                assert!(!b.body.contains(&answer), "{} {mode}: canonical answer leaked", inst.id);
                assert!(!target_part.contains("Solution"), "{} {mode}: solution text after the target", inst.id);
                assert_eq!(b.body, render(&inst, mode, &ex).unwrap().body, "rendering is deterministic");
            }
        }
    }
}

#[test]
fn exemplar_mismatches_are_errors() {
    let t = target();
    let fixture = load_fixture(FIXTURE).unwrap();
    let dfs = solve(&fixture, SearchMode::Dfs);
    let err = render(&t, PromptMode::CoT, &[(fixture.clone(), dfs.clone())]).unwrap_err();
    assert!(matches!(err, PromptError::WrongTraceMode { .. }), "{err}");
    let err = render(&fixture, PromptMode::AoT, &[(fixture.clone(), dfs.clone())]).unwrap_err();
    assert!(matches!(err, PromptError::TargetAmongExemplars(_)), "{err}");
    let tiny = RenderOptions { max_prompt_tokens: Some(50) };
    let err = render_with(&t, PromptMode::AoT, &[(fixture, dfs)], &tiny).unwrap_err();
    assert!(matches!(err, PromptError::ContextBudgetExceeded { .. }), "{err}");
}

#[test]
fn truncation_keeps_the_solution_path() {
    let t = target();
    let fixture = load_fixture(FIXTURE).unwrap();
    let ex = [(fixture, solve(&load_fixture(FIXTURE).unwrap(), SearchMode::Dfs))];
    let full = render(&t, PromptMode::AoT, &ex).unwrap();
    let budget = reasonbench::prompt::estimate_tokens(&full.body) - 150;
    let cut = render_with(&t, PromptMode::AoT, &ex, &RenderOptions { max_prompt_tokens: Some(budget) }).unwrap();
    assert!(reasonbench::prompt::estimate_tokens(&cut.body) <= budget);
    assert!(cut.body.contains("off-path steps omitted"));
    for city in ["Edinburgh", "Milan", "Copenhagen", "Riga", "Vilnius", "Brussels"] {
        assert!(cut.body.contains(&format!("→**{city}**")) || cut.body.contains(&format!("**Start {city}**")), "{city}");
    }
    assert!(cut.body.contains("**Success**"));
}

fn attempt(raw: &str) -> Attempt {
    Attempt {
        request_digest: "d".into(),
        raw_response: raw.into(),
        thinking_text: None,
        parsed: None,
        verdict: Verdict::WrongAnswer("plan differs from the reference plan".into()),
        round_index: 0,
        sample_index: 0,
        thinking: false,
        temperature: 0.0,
        token_counts: TokenCounts::default(),
    }
}

#[test]
fn refine_quotes_the_answer_and_hides_the_verdict() {
    let fixture = load_fixture(FIXTURE).unwrap();
    let t = target();
    let first = bundle_for(&t, PromptMode::Direct);
    let Solution::TripPlan(mut legs) = fixture.ground_truth.clone() else { unreachable!() };
    legs.swap(0, 1);
    let wrong = render_answer(&fixture.payload, &Solution::TripPlan(legs));
    let second = render_refine(&first, &attempt(&wrong));
    assert!(second.body.contains(&wrong));
    assert!(second.body.contains(REFINE_INSTRUCTION));
    assert!(!second.body.contains("reference plan"), "verdict leaked");
    assert_eq!(second.refine_round, 1);
    check_golden("refine.txt", &second.body);

    let msgs = second.messages();
    assert_eq!(msgs.len(), 4);
    assert_eq!(msgs[1].text, first.body);
    assert_eq!((msgs[2].role, msgs[2].text.as_str()), (Role::Assistant, wrong.as_str()));

    let third = render_refine(&second, &attempt(""));
    assert!(third.body.contains(EMPTY_ANSWER_PLACEHOLDER));
    assert_eq!(third.refine_round, 2);
    assert_eq!(third.messages().len(), 6);
}
