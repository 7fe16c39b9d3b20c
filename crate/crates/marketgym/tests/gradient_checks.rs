mod common;

#[test]
fn every_head_passes_finite_differences() {
    println!("{}", common::gradients::criterion().unwrap());
}
