mod common;

use marketgym::baselines::minimize_on_simplex;

#[test]
fn optimizers_match_oracles() {
    println!("{}", common::baselines::criterion().unwrap());
}

#[test]
fn equal_variance_uncorrelated_pair_splits_evenly() {
    let w = minimize_on_simplex(&[0.04, 0.0, 0.0, 0.04], 2, &[0.0, 0.0], 1.0).weights;
    assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
}

#[test]
fn zero_risk_aversion_picks_the_best_mean() {
    let s = minimize_on_simplex(&[1.0, 0.0, 0.0, 1.0], 2, &[0.1, 0.3], 0.0);
    assert_eq!(s.weights, vec![0.0, 1.0]);
}
