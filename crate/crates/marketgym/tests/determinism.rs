mod common;

use common::determinism::{run_pipeline, snapshot};

#[test]
fn repeated_runs_are_byte_identical() {
    println!("{}", common::determinism::criterion().unwrap());
}

#[test]
fn a_different_seed_changes_the_training_log() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_pipeline(&a, Some(1)).unwrap();
    run_pipeline(&b, Some(2)).unwrap();
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    assert_ne!(sa["training_log_td3.csv"], sb["training_log_td3.csv"]);
    assert_ne!(sa["policy_ppo.json"], sb["policy_ppo.json"]);
}
