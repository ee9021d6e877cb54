use neurosym::engine::{EvalErrorKind, Limits, Value};
use neurosym::extraction::{
    classify_completion, classify_text, BlockPolicy, Classification, CompletionRecord, OutcomeKind, CLOSE_TAG, OPEN_TAG,
};
use neurosym::scoring::{compute_reward, corpus_accuracy, match_answer, GroundTruth, Percentage, RewardConfig};
use proptest::prelude::*;

mod common;
use common::corpus::labelled_completions;

#[test]
fn labelled_corpus_is_classified_exactly() {
    let limits = Limits::default();
    let corpus = labelled_completions();
    let outcomes: Vec<_> = corpus.iter().map(|(r, _)| classify_completion(r, &limits)).collect();
    for ((record, label), outcome) in corpus.iter().zip(&outcomes) {
        assert_eq!(outcome.classification(), *label, "{:?}", record.completion_text);
    }
    let code = outcomes.iter().filter(|o| o.has_code()).count();
    let noerr = outcomes.iter().filter(|o| o.error_free()).count();
    assert_eq!(Percentage::of_counts(code, 100).to_string(), "75.00");
    assert_eq!(Percentage::of_counts(noerr, 100).to_string(), "25.00");
}

#[test]
fn fraction_program_in_a_completion() {
    let program =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/programs/fraction.wl")).unwrap();
    let record =
        CompletionRecord::new("1", "p", format!("Reasoning first.\n{OPEN_TAG}\n{program}\n{CLOSE_TAG}\nSo A."));
    let outcome = classify_completion(&record, &Limits::default());
    assert_eq!(outcome.answer(), Some(&Value::str("A")));
    let truth = GroundTruth::option("A").unwrap();
    assert_eq!(compute_reward(&outcome, &truth, &RewardConfig::default()), 1.3);
}

#[test]
fn reward_tiers_with_defaults() {
    let limits = Limits::default();
    let truth = GroundTruth::option("A").unwrap();
    let reward =
        |t: &str| compute_reward(&classify_text(t, &limits, BlockPolicy::Last), &truth, &RewardConfig::default());
    assert_eq!(reward("no code"), 0.0);
    assert_eq!(reward("<neurosymtag>f := Module[{}, 1/0];</neurosymtag>"), 0.1);
    assert_eq!(reward("<neurosymtag>f := [</neurosymtag>"), 0.1);
    assert_eq!(reward("<neurosymtag>\"B\"</neurosymtag>"), 0.3);
    assert_eq!(reward("<neurosymtag>\"A\"</neurosymtag>"), 1.3);
    let div = classify_text("<neurosymtag>f := Module[{}, 1/0];</neurosymtag>", &limits, BlockPolicy::Last);
    assert!(matches!(div.kind(), OutcomeKind::RuntimeError(e) if e.kind == EvalErrorKind::DivisionByZero));
}

#[test]
fn corpus_accuracy_examples() {
    let limits = Limits::default();
    let right = classify_text("<neurosymtag>7</neurosymtag>", &limits, BlockPolicy::Last);
    let wrong = classify_text("none", &limits, BlockPolicy::Last);
    let truth = GroundTruth::ExactNumber(num_bigint::BigInt::from(7).into());
    let mut outcomes = vec![right];
    outcomes.extend(std::iter::repeat_n(wrong, 11));
    let truths = vec![truth; 12];
    assert_eq!(corpus_accuracy(&outcomes, &truths).unwrap().to_string(), "8.33");
}

fn arb_prose() -> impl Strategy<Value = String> {
    "[a-zA-Z0-9 .,:;<>/()=+\\-\n]{0,40}".prop_filter("tag-free", |s| !s.contains(OPEN_TAG) && !s.contains(CLOSE_TAG))
}

fn arb_weights() -> impl Strategy<Value = RewardConfig> {
    (0.001f64..5.0, 0.001f64..5.0, 0.001f64..5.0, any::<bool>()).prop_map(|(c, e, h, additive)| RewardConfig {
        w_correct: c,
        w_error_free: e,
        w_has_code: h,
        components_additive: additive,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn prose_around_closed_blocks_is_ignored(before in arb_prose(), after in arb_prose(), pick in 0usize..100) {
        let limits = Limits::default();
        let (record, _) = &labelled_completions()[pick];
        let base = classify_text(&record.completion_text, &limits, BlockPolicy::Last);
        let prepended = classify_text(&format!("{before}{}", record.completion_text), &limits, BlockPolicy::Last);
        prop_assert_eq!(&prepended, &base);
        // Appending after an unterminated block would extend the salvaged source.
        let extracted_open = record.completion_text.rfind(OPEN_TAG).is_some_and(|o| !record.completion_text[o..].contains(CLOSE_TAG));
        if !extracted_open {
            let appended = classify_text(&format!("{}{after}", record.completion_text), &limits, BlockPolicy::Last);
            prop_assert_eq!(&appended, &base);
        }
    }

    #[test]
    fn taxonomy_is_a_partition(pick in 0usize..100, prose in arb_prose()) {
        let (record, _) = &labelled_completions()[pick];
        let outcome = classify_text(&format!("{prose}{}", record.completion_text), &Limits::default(), BlockPolicy::Last);
        prop_assert!(!outcome.error_free() || outcome.has_code());
        prop_assert_eq!(outcome.has_code(), outcome.extracted_source().is_some());
        prop_assert_eq!(outcome.classification() == Classification::NoCode, !outcome.has_code());
    }

    #[test]
    fn rewards_are_bounded_and_ordered(config in arb_weights(), pick in 0usize..100) {
        let limits = Limits::default();
        let truth = GroundTruth::ExactNumber(num_bigint::BigInt::from(1).into());
        let reward = |t: &str| compute_reward(&classify_text(t, &limits, BlockPolicy::Last), &truth, &config);
        let tiers = [
            reward("prose only"),
            reward("<neurosymtag>1/0</neurosymtag>"),
            reward("<neurosymtag>2</neurosymtag>"),
            reward("<neurosymtag>1</neurosymtag>"),
        ];
        if config.components_additive {
            prop_assert!(tiers.windows(2).all(|w| w[0] < w[1]), "{:?}", tiers);
        }
        let (record, _) = &labelled_completions()[pick];
        let r = reward(&record.completion_text);
        let cap = config.w_correct + config.w_error_free + config.w_has_code;
        prop_assert!((0.0..=cap).contains(&r));
    }

    #[test]
    fn approximate_match_depends_on_distance_only(t in -1e6f64..1e6, d in -1e-3f64..1e-3) {
        let truth = GroundTruth::approx(t, 1e-6).unwrap();
        let mirror = GroundTruth::approx(-t, 1e-6).unwrap();
        let hit = match_answer(&Value::Real(t + d), &truth);
        prop_assert_eq!(hit, match_answer(&Value::Real(-t - d), &mirror));
        let tol = 1e-6 * t.abs().max(1.0);
        if d.abs() < tol * 0.999 {
            prop_assert!(hit);
        } else if d.abs() > tol * 1.001 {
            prop_assert!(!hit);
        }
    }
}
