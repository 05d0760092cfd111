//! Closed forms against exhaustive enumeration.

mod common;

use proptest::prelude::*;

use common::*;
use sfc_reliability::analytic;
use sfc_reliability::model::{ChainSpec, Overhead, ReliabilityParams, Scheme};
use sfc_reliability::oracle::{self, Oracle};

const TOL: f64 = 1e-12;

fn assert_close(what: &str, a: f64, b: f64) {
    assert!((a - b).abs() <= TOL, "{what}: analytic {a} vs oracle {b} (|d| = {:e})", (a - b).abs());
}

fn check_all(spec: &ChainSpec, rel: &ReliabilityParams) {
    let oracle = Oracle::default();
    for scheme in [Scheme::Unprotected, Scheme::BackupVnfOnly, Scheme::Backup, Scheme::Coding] {
        assert_close(
            &format!("{} {spec:?}", scheme.name()),
            analytic::success(&scheme, spec, rel),
            oracle.exact_success(&scheme, spec, rel).unwrap(),
        );
    }
    assert_close(
        "P_R",
        analytic::prob_redirection(spec, rel),
        oracle.exact_overhead(Overhead::Redirection, spec, rel).unwrap(),
    );
    assert_close(
        "P_dec",
        analytic::prob_decoding(spec, rel),
        oracle.exact_overhead(Overhead::Decoding, spec, rel).unwrap(),
    );
}

#[test]
fn closed_forms_match_enumeration_on_small_grid() {
    for (i, spec) in small_grid().iter().enumerate() {
        for rel in random_rels(100 + i as u64, 2) {
            check_all(spec, &rel);
        }
    }
}

#[test]
fn hybrid_matches_enumeration_on_two_part_layouts() {
    for (i, spec) in small_grid().iter().filter(|s| s.total_vnfs() >= 2).enumerate() {
        let rel = random_rels(700 + i as u64, 1)[0];
        for layout in two_part_layouts(spec) {
            let hybrid = Scheme::Hybrid(layout.clone());
            assert_close(
                "hybrid",
                analytic::success(&hybrid, spec, &rel),
                oracle::exact_success(&hybrid, spec, &rel).unwrap(),
            );
            let baseline = Scheme::LayoutBackup(layout);
            assert_close(
                "layout-backup",
                analytic::success(&baseline, spec, &rel),
                oracle::exact_success(&baseline, spec, &rel).unwrap(),
            );
        }
    }
}

#[test]
fn blockwise_matches_joint_enumeration() {
    let specs = [spec(1, 0, &[1]), spec(1, 1, &[1]), spec(2, 1, &[1]), spec(1, 1, &[1, 1]), spec(2, 0, &[1, 2])];
    for (i, spec) in specs.iter().enumerate() {
        for rel in random_rels(900 + i as u64, 2) {
            for scheme in [Scheme::Unprotected, Scheme::BackupVnfOnly, Scheme::Backup, Scheme::Coding] {
                let blockwise = oracle::exact_success(&scheme, spec, &rel).unwrap();
                let joint = oracle::joint_success(&scheme, spec, &rel, 20).unwrap();
                assert!((blockwise - joint).abs() <= TOL, "{} {spec:?}", scheme.name());
            }
            for kind in [Overhead::Redirection, Overhead::Decoding] {
                let blockwise = oracle::exact_overhead(kind, spec, &rel).unwrap();
                let joint = oracle::joint_overhead(kind, spec, &rel, 20).unwrap();
                assert!((blockwise - joint).abs() <= TOL, "{kind:?} {spec:?}");
            }
        }
    }
}

#[test]
fn joint_enumeration_is_normalized() {
    let spec = spec(2, 1, &[1, 1]);
    let rel = random_rels(5, 1)[0];
    for layout in [oracle::Layout::Backup, oracle::Layout::Coding] {
        let total = oracle::joint_probability(layout, &spec, &rel, 22, |_| true).unwrap();
        assert!((total - 1.0).abs() < 1e-12, "{layout:?}: {total}");
    }
}

#[test]
fn hand_computed_instances() {
    // one stage, one VNF, k=1, r=1, everything 0.9:
    // destination 0.9 times a stage that needs one of two (segment, server, VNF) chains
    let one = spec(1, 1, &[1]);
    let rel = ReliabilityParams::uniform(0.9).unwrap();
    let chain = 0.9f64.powi(3);
    let expected = 0.9 * (1.0 - (1.0 - chain) * (1.0 - chain));
    assert_close("backup", analytic::success_backup(&one, &rel), expected);
    assert_close("oracle", oracle::exact_success(&Scheme::Backup, &one, &rel).unwrap(), expected);
    // coding: two private chains of (2 segments, server, VNF), one suffices
    let rh = 0.9f64.powi(4);
    assert_close("coding", analytic::success_coding(&one, &rel), 1.0 - (1.0 - rh).powi(2));
    assert_close("P_dec", analytic::prob_decoding(&one, &rel), (1.0 - rh) * rh);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn closed_forms_match_enumeration(spec in arb_spec(3, 2, 2), rel in arb_rel()) {
        check_all(&spec, &rel);
    }
}
