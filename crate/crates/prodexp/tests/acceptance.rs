//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS/FAIL (...)` line; run with `-- --nocapture` to see the
//! lines for passing tests too.

use std::fs;
use std::path::PathBuf;
use std::process::Command;

use prodexp::expansion::f_bound;
use prodexp::suites::{
    closure_figure_battery, closure_size_battery, decompose_battery, duality_battery,
    intersection_battery, ltc_battery, oracle_battery, repetition_battery, sandwich_battery,
    subcode_battery, theorem1_experiment, ExperimentConfig, SuiteReport,
};
use prodexp::{Caps, Rat};

const CAPS: Caps = Caps {
    codewords: 1 << 26,
    cosets: 1 << 26,
    subsets: 1 << 26,
    distance: 1 << 26,
    sweep: 1 << 26,
};
const SEED: u64 = 0;

fn report(n: usize, battery: &SuiteReport) {
    let pass = battery.pass();
    println!("criterion {n}: {} ({})", if pass { "PASS" } else { "FAIL" }, battery.summary());
    for c in &battery.checks {
        if !c.pass {
            println!("  failed: {}", c.label);
        }
    }
    assert!(pass, "criterion {n} failed");
}

#[test]
fn criterion_01_half_closure_of_the_thirteen_cell_seed() {
    report(1, &closure_figure_battery().unwrap());
}

#[test]
fn criterion_02_seven_cell_pattern_duality() {
    report(2, &duality_battery().unwrap());
}

#[test]
fn criterion_03_sweep_and_complex_routes_agree() {
    report(3, &oracle_battery(SEED, 2, &CAPS).unwrap());
}

#[test]
fn criterion_04_repetition_pair_and_triple_bounds() {
    report(4, &repetition_battery(&CAPS).unwrap());
}

#[test]
fn criterion_05_gamma_rho_threshold_sandwich() {
    report(5, &sandwich_battery(SEED, &CAPS).unwrap());
}

#[test]
fn criterion_06_closure_growth_bound() {
    report(6, &closure_size_battery(SEED).unwrap());
}

#[test]
fn criterion_07_subcode_expansion_bounds() {
    report(7, &subcode_battery(SEED, &CAPS).unwrap());
}

#[test]
fn criterion_08_tensor_sum_intersection_identity() {
    report(8, &intersection_battery(SEED).unwrap());
}

#[test]
fn criterion_09_random_substitution_experiment() {
    let cfg = ExperimentConfig::theorem_one_defaults(SEED);
    let out = theorem1_experiment(&cfg).unwrap();
    // Analytic failure bound 2^2 * 2^(4-16+1) = 2^-9, plus a three-sigma
    // Monte Carlo margin at 1000 samples.
    let bound = 1.0f64 / 512.0;
    let margin = 3.0 * (bound / 1000.0).sqrt();
    let pass = out.fraction <= bound + margin && out.all_good_certified;
    println!(
        "criterion 9: {} (failures {}/{}, threshold {:.6}, certified {}/{})",
        if pass { "PASS" } else { "FAIL" },
        out.failures,
        cfg.samples,
        bound + margin,
        out.certified,
        out.good
    );
    assert!(pass, "criterion 9 failed");
}

#[test]
fn criterion_10_soundness_preservation_suite() {
    report(10, &ltc_battery(SEED, &CAPS).unwrap());
}

#[test]
fn criterion_11_constructive_decomposition_cost() {
    assert_eq!(f_bound(1, Rat::new(1, 1), Rat::new(1, 1), Rat::new(2, 3)).unwrap(), Rat::new(2, 3));
    assert_eq!(f_bound(1, Rat::new(1, 2), Rat::new(3, 1), Rat::new(1, 4)).unwrap(), Rat::new(1, 4));
    assert_eq!(f_bound(2, Rat::new(1, 1), Rat::new(1, 1), Rat::new(1, 1)).unwrap(), Rat::new(1, 18));
    report(11, &decompose_battery(SEED, &CAPS).unwrap());
}

const REP2_TUPLE: &str = "tuple 2 2 2\ncode 2 1\n2 1 2\n1 1\ncode 2 1\n2 1 2\n1 1\n";
const DIAG_CELLS: &str = "cells 2 2 2\n0 0\n1 1\n";
const SEED_CELLS: &str = "cells 6 2 13\n0 5\n4 5\n5 5\n5 4\n1 3\n2 3\n4 2\n4 1\n5 1\n0 0\n1 0\n2 0\n3 0\n";
const REP3_PARITY: &str = "2 2 3\n1 1 0\n0 1 1\n";
const REP2_BUNDLE: &str = "code 2 1\n2 1 2\n1 1\n2 1 2\n1 1\nltc 2 2 1 1\n";

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prodexp"))
}

fn run(args: &[String]) -> Vec<u8> {
    let out = bin().args(args).output().unwrap();
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

#[test]
fn criterion_12_byte_identical_reruns() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("determinism");
    fs::create_dir_all(&dir).unwrap();
    let path = |name: &str| dir.join(name).to_str().unwrap().to_owned();
    fs::write(path("rep2.tuple"), REP2_TUPLE).unwrap();
    fs::write(path("diag.cells"), DIAG_CELLS).unwrap();
    fs::write(path("seed.cells"), SEED_CELLS).unwrap();
    fs::write(path("rep3par.mat"), REP3_PARITY).unwrap();
    fs::write(path("rep2.bundle"), REP2_BUNDLE).unwrap();
    run(&svec(&["ltc-build", &path("rep2.bundle"), "--extend", "3", "--out", &path("rep6.bundle")]));
    run(&svec(&["ltc-build", &path("rep2.bundle"), "--extend", "9", "--out", &path("rep18.bundle")]));

    let cases: Vec<Vec<String>> = vec![
        svec(&["rho", &path("rep2.tuple"), "--oracle"]),
        svec(&["eta", &path("rep2.tuple")]),
        svec(&["closure", &path("seed.cells"), "--eps", "1/2"]),
        svec(&["epsmax", &path("rep2.tuple")]),
        svec(&["extend", &path("rep2.tuple"), &path("diag.cells")]),
        svec(&["innergen", &path("rep2.tuple"), &path("diag.cells")]),
        svec(&["maxext", &path("rep2.tuple")]),
        svec(&["soundness", &path("rep3par.mat")]),
        svec(&["ltc-build", &path("rep2.bundle"), "--extend", "3", "--pad", "1"]),
        svec(&[
            "rate-adapt",
            &path("rep2.bundle"),
            &path("rep6.bundle"),
            &path("rep18.bundle"),
            "--length",
            "7",
            "--rate",
            "1/3",
            "--growth",
            "3/1",
        ]),
        svec(&["theorem1", "--samples", "25", "--field-degree", "12"]),
        svec(&["suite", "repetition"]),
    ];
    let mut pass = true;
    for case in &cases {
        let base = run(&with_threads(case, "1"));
        let rerun = run(&with_threads(case, "1"));
        let threaded = run(&with_threads(case, "3"));
        if base != rerun || base != threaded {
            pass = false;
            println!("  diverged: {case:?}");
        }
    }
    println!(
        "criterion 12: {} ({} commands byte-stable across reruns and thread counts)",
        if pass { "PASS" } else { "FAIL" },
        cases.len()
    );
    assert!(pass, "criterion 12 failed");
}

fn svec(parts: &[&str]) -> Vec<String> {
    parts.iter().map(|s| s.to_string()).collect()
}

fn with_threads(case: &[String], threads: &str) -> Vec<String> {
    let mut args = case.to_vec();
    for extra in ["--seed", "0", "--threads", threads] {
        args.push(extra.to_owned());
    }
    args
}
