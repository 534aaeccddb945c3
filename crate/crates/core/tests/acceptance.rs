//! Acceptance gate: one test per criterion, each printing a single
//! pass/fail line with the measured extremes. Tolerances live inside the
//! criterion implementations, next to the quantities they bound.

use dht_core::suite::run_criterion;

const SEED: u64 = 0;

fn check(index: usize) {
    let c = run_criterion(index, SEED);
    println!(
        "criterion {:2} {} {}: {}",
        c.index,
        if c.pass { "PASS" } else { "FAIL" },
        c.name,
        c.details
    );
    assert!(c.pass, "criterion {} ({}) failed: {}", c.index, c.name, c.details);
}

#[test]
fn criterion_01_three_atom_split_reconstruction() {
    check(1);
}

#[test]
fn criterion_02_haar_expansion_residuals() {
    check(2);
}

#[test]
fn criterion_03_single_atom_correction() {
    check(3);
}

#[test]
fn criterion_04_lambda_norm_sandwich() {
    check(4);
}

#[test]
fn criterion_05_pairing_under_shifted_norm() {
    check(5);
}

#[test]
fn criterion_06_tau_operator_norm_bound() {
    check(6);
}

#[test]
fn criterion_07_dyadic_maximal_dichotomy() {
    check(7);
}

#[test]
fn criterion_08_spike_train_cost_and_moments() {
    check(8);
}

#[test]
fn criterion_09_kernel_bracket_identity() {
    check(9);
}

#[test]
fn criterion_10_two_dimensional_generators() {
    check(10);
}
