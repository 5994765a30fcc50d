use std::sync::Arc;
use std::time::Duration;

use tracebench_core::benchgen::{gen_s5_program, gen_zoo_item, BenchmarkItem, Category};
use tracebench_harness::mock::MockOptions;
use tracebench_harness::*;

fn quick_retry() -> RetryPolicy {
    RetryPolicy { attempts: 3, base_delay: Duration::from_millis(5) }
}

fn http(server: &MockServer, token: Option<&str>) -> HttpModel {
    let mut ep = ModelEndpoint::new(server.url(), "mock", 1 << 20);
    ep.auth_token = token.map(String::from);
    HttpModel::new(ep).unwrap().with_retry(quick_retry())
}

fn items() -> Vec<BenchmarkItem> {
    vec![
        gen_zoo_item(Category::List, 2, 3).unwrap(),
        gen_zoo_item(Category::Math, 1, 0).unwrap(),
        gen_s5_program(5, 12, 7, (1, 9)).unwrap(),
    ]
}

#[test]
fn oracle_over_http_is_always_right() {
    let server = MockServer::start(Arc::new(OracleModel::new())).unwrap();
    let model = http(&server, None);
    let settings = EvalSettings { jobs: 3, max_tokens: 1 << 20, ..EvalSettings::default() };
    let records: Vec<EvalRecord> = run_eval(&items(), &model, &settings).into_iter().map(Result::unwrap).collect();
    assert!(records.iter().all(|r| r.verdict == Verdict::Correct));
    assert_eq!(server.request_count(), 3);

    let tf = EvalSettings { mode: EvalMode::TeacherForcing, ..settings };
    let r = evaluate_item(&items()[2], &model, &tf).unwrap();
    assert_eq!(r.step_accuracy(), Some(1.0));
    assert_eq!(r.verdict, Verdict::Correct);
}

#[test]
fn transient_failures_are_retried() {
    let opts = MockOptions { fail_first: 2, ..MockOptions::default() };
    let server = MockServer::start_with(Arc::new(OracleModel::new()), opts).unwrap();
    let model = http(&server, None);
    let r = evaluate_baseline(&items()[1], &model, &EvalSettings::default()).unwrap();
    assert_eq!(r.verdict, Verdict::Correct);
    assert_eq!(server.request_count(), 3);
}

#[test]
fn retries_give_up_after_three_attempts() {
    let opts = MockOptions { fail_first: 5, ..MockOptions::default() };
    let server = MockServer::start_with(Arc::new(OracleModel::new()), opts).unwrap();
    let err = evaluate_baseline(&items()[1], &http(&server, None), &EvalSettings::default()).unwrap_err();
    assert!(matches!(err, HarnessError::Transport(_)), "{err}");
    assert_eq!(server.request_count(), 3);
}

#[test]
fn bad_token_is_not_retried() {
    let opts = MockOptions { require_token: Some("s3cret".into()), ..MockOptions::default() };
    let server = MockServer::start_with(Arc::new(OracleModel::new()), opts).unwrap();
    let err = evaluate_baseline(&items()[1], &http(&server, Some("nope")), &EvalSettings::default()).unwrap_err();
    assert!(matches!(err, HarnessError::AuthFailure { status: 401 }), "{err}");
    assert_eq!(server.request_count(), 1);
    let ok = evaluate_baseline(&items()[1], &http(&server, Some("s3cret")), &EvalSettings::default()).unwrap();
    assert_eq!(ok.verdict, Verdict::Correct);
}

#[test]
fn length_cutoff_comes_back_as_truncated() {
    let server = MockServer::start(Arc::new(CannedModel::cut_off("<|frame_sep|><|call_sep|>{}"))).unwrap();
    let r = evaluate_baseline(&items()[0], &http(&server, None), &EvalSettings::default()).unwrap();
    assert_eq!(r.finish_reason, FinishReason::Length);
    assert_eq!(r.verdict, Verdict::Truncated);
}

#[test]
fn one_bad_action_spoils_the_rest_of_a_free_run() {
    let item = gen_s5_program(5, 16, 3, (1, 9)).unwrap();
    for k in [1, 6, 16] {
        let model = CorruptingS5Model::new(k);
        let r = evaluate_baseline(&item, &model, &EvalSettings { max_tokens: 1 << 20, ..EvalSettings::default() })
            .unwrap();
        assert_eq!(r.first_bad_action, Some(k));
        assert_eq!(r.verdict, Verdict::Wrong);
        let aligned = eval::s5_state_alignment(&item, &r.completion).unwrap();
        assert_eq!(aligned.len(), 16);
        for (i, ok) in aligned.iter().enumerate() {
            assert_eq!(*ok, i + 1 < k, "k={k} op {}", i + 1);
        }
    }
}

#[test]
fn teacher_forcing_isolates_the_bad_step() {
    let item = gen_s5_program(5, 16, 3, (1, 9)).unwrap();
    let settings = EvalSettings { mode: EvalMode::TeacherForcing, ..EvalSettings::default() };
    for k in [1, 6, 16] {
        let r = teacher_force_eval(&item, &CorruptingS5Model::new(k), &settings).unwrap();
        let steps = r.per_step.as_ref().unwrap();
        assert_eq!(steps.len(), 16);
        for s in steps {
            assert_eq!(s.matches, s.step != k, "k={k} step {}", s.step);
        }
        assert_eq!(r.verdict == Verdict::Correct, k != 16);
    }
}
