mod common;

use anpl::compiler::{compile, compile_traced, recover_sketch, AttemptOutcome, CompileError, MAX_ATTEMPTS};
use anpl::llm::MockModel;
use anpl::sketch::AnplProgram;
use common::*;
use rand::SeedableRng;
use std::time::Instant;

const GOOD: &str = "```python\ndef pick(inputs):\n    return inputs[0]\n```";
const TWO_ENTRIES: &str = "```python\ndef a(x):\n    return x\n\ndef b(x):\n    return x\n```";

#[test]
fn random_sketches_survive_compilation() {
    let t = Instant::now();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    let mut holes = 0;
    let mut renamed = 0;
    for i in 0..100 {
        let text = SketchGen::program(&mut rng);
        let anpl = AnplProgram::parse(&text).unwrap_or_else(|e| panic!("sketch {i} does not parse: {e}\n{text}"));
        let p = compile(&anpl, &random_fill_model(i)).unwrap_or_else(|e| panic!("sketch {i}: {e}\n{text}"));
        assert_eq!(recover_sketch(&p), anpl.render(), "sketch {i}:\n{text}\n--- target:\n{}", p.target_source);
        holes += p.fill_map.len();
        renamed += p.fill_map.values().filter(|n| n.contains("__v")).count();
    }
    assert!(t.elapsed().as_secs_f64() < 10.0, "took {:?}", t.elapsed());
    assert!(holes > 100, "generator too tame: {holes} holes");
    assert!(renamed > 0, "no collision was exercised");
}

#[test]
fn compiling_twice_is_byte_identical() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    for i in 0..20 {
        let anpl = AnplProgram::parse(&SketchGen::program(&mut rng)).unwrap();
        let a = compile(&anpl, &random_fill_model(i)).unwrap();
        let b = compile(&anpl, &random_fill_model(i)).unwrap();
        assert_eq!(a.target_source, b.target_source);
    }
}

#[test]
fn temperatures_step_by_a_tenth() {
    let expected = [0.0, 0.1, 0.2, 0.3, 0.4];
    let anpl = AnplProgram::parse(TASK64_ANPL).unwrap();
    for k in 0..MAX_ATTEMPTS {
        // named hole first, then the inline one
        let mut replies: Vec<&str> = vec!["```python\ndef seperate_input(input):\n    return [input]\n```"];
        replies.extend(std::iter::repeat("no code here").take(k));
        replies.push(GOOD);
        let llm = MockModel::new().with_sequence(replies);
        let (p, attempts) = compile_traced(&anpl, &llm).unwrap();
        let temps: Vec<f64> = llm.calls()[1..].iter().map(|c| c.temperature).collect();
        assert_eq!(temps, expected[..=k]);
        assert_eq!(attempts.len(), k + 2);
        assert!(llm.calls().iter().all(|c| c.n_completions == 1 && c.max_tokens == 1024));
        assert_eq!(p.fill_name("main@1"), Some("pick"));
    }
}

#[test]
fn five_rejections_exhaust() {
    let anpl = AnplProgram::parse("def main(x):\n    return \"f\"(x)\n").unwrap();
    let llm = MockModel::new().with_responder(|_| Some(vec![TWO_ENTRIES.into()]));
    let err = compile(&anpl, &llm).unwrap_err();
    let CompileError::ExhaustedAttempts { hole_id, attempts, .. } = err else {
        panic!("{err}")
    };
    assert_eq!(hole_id, "main@0");
    assert_eq!(attempts.len(), 5);
    assert_eq!(llm.call_count(), 5);
    assert_eq!(attempts.iter().map(|a| a.temperature).collect::<Vec<_>>(), [0.0, 0.1, 0.2, 0.3, 0.4]);
    assert!(attempts.iter().all(|a| matches!(a.outcome, AttemptOutcome::Rejected(_))));
}

#[test]
fn named_match_keeps_only_reachable_helpers() {
    let anpl = AnplProgram::parse(TASK64_ANPL).unwrap();
    let llm = MockModel::new().with_sequence([
        "```python\ndef seperate_input(input):\n    return split(input)\n\ndef split(g):\n    return [g]\n\ndef demo():\n    print(seperate_input([[1]]))\n```",
        GOOD,
    ]);
    let p = compile(&anpl, &llm).unwrap();
    assert_eq!(p.fill_nodes("seperate_input"), ["seperate_input", "split"]);
    assert!(!p.target_source.contains("def demo"));
    assert_eq!(llm.call_count(), 2);
}

#[test]
fn single_entry_is_spliced_under_its_own_name() {
    let anpl = AnplProgram::parse("def main(x):\n    y = \"double it\"(x)\n    return y\n").unwrap();
    let llm = MockModel::new().with_sequence(["```python\ndef double(v):\n    return twice(v)\n\ndef twice(v):\n    return v * 2\n```"]);
    let p = compile(&anpl, &llm).unwrap();
    assert_eq!(p.fill_name("main@0"), Some("double"));
    assert!(p.target_source.contains("    y = double(x)\n"));
    assert!(p.target_source.contains("# fill for main@0\ndef double(v):"));
}

#[test]
fn several_entries_are_regenerated() {
    let anpl = AnplProgram::parse("def main(x):\n    return \"f\"(x)\n").unwrap();
    let llm = MockModel::new().with_sequence([TWO_ENTRIES, TWO_ENTRIES, "```python\ndef f(x):\n    return x\n```"]);
    let (p, attempts) = compile_traced(&anpl, &llm).unwrap();
    assert_eq!(attempts.len(), 3);
    assert!(matches!(&attempts[0].outcome, AttemptOutcome::Rejected(r) if r.contains('a') && r.contains('b')));
    assert_eq!(p.fill_name("main@0"), Some("f"));
}

#[test]
fn recursion_sugar_passes_own_name() {
    let anpl = AnplProgram::parse("def fact(n):\n    return \"n times fact of n minus one, one at zero\"(n, fact)\n\ndef main(x):\n    return fact(x)\n").unwrap();
    let llm = MockModel::new().with_sequence(["```python\ndef step(n, fact):\n    return 1 if n == 0 else n * fact(n - 1)\n```"]);
    let p = compile(&anpl, &llm).unwrap();
    assert!(p.target_source.contains("return step(n, fact)"));
    assert_eq!(recover_sketch(&p), anpl.render());
    let prompt = &llm.calls()[0].user_text;
    assert!(prompt.contains("def _hole0(n, fact):"), "{prompt}");
}

#[test]
fn live_result_of_task64_fill() {
    if !live_python() {
        return;
    }
    let anpl = AnplProgram::parse(TASK64_ANPL).unwrap();
    let llm = MockModel::new().with_sequence([
        "```python\ndef seperate_input(input):\n    h = len(input) // 2\n    w = len(input[0]) // 2\n    return [input[:h, :w], input[:h, w + 1:], input[h + 1:, :w], input[h + 1:, w + 1:]]\n```",
        "```python\ndef non_uniform(inputs):\n    for a in inputs:\n        if len(np.unique(a)) > 1:\n            return a\n    return inputs[0]\n```",
    ]);
    let p = compile(&anpl, &llm).unwrap();
    let task = anpl::arc::load_task(fixture("tasks/2dc579da.json")).unwrap();
    let v = anpl::arc::check(&p, &task, &mini_harness()).unwrap();
    assert!(v.train_pass && v.test_pass, "{v:?}\n{}", p.target_source);
}

