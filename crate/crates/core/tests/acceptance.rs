//! Acceptance battery: one test per criterion, each printing its pass/fail
//! summary line. Run with `cargo test --test acceptance -- --nocapture` to
//! see every line.

use morrey_lab::verification::{run_criterion, CriterionResult};

fn check(id: u32) {
    let result: CriterionResult = run_criterion(id);
    println!("{}", result.summary_line());
    assert!(result.passed, "{}", result.summary_line());
}

#[test]
fn criterion_01_morrey_norm_oracle() {
    check(1);
}

#[test]
fn criterion_02_norm_axioms_and_completeness_proxy() {
    check(2);
}

#[test]
fn criterion_03_capacity_oracle() {
    check(3);
}

#[test]
fn criterion_04_cdc_sweeps() {
    check(4);
}

#[test]
fn criterion_05_green_operator_convergence() {
    check(5);
}

#[test]
fn criterion_06_boundary_lift() {
    check(6);
}

#[test]
fn criterion_07_series_direct_equivalence() {
    check(7);
}

#[test]
fn criterion_08_bound_shape() {
    check(8);
}

#[test]
fn criterion_09_zero_data_uniqueness() {
    check(9);
}

#[test]
fn criterion_10_global_holder_demo() {
    check(10);
}

#[test]
fn criterion_11_manufactured_exactness() {
    check(11);
}
