//! The transfer-matrix fixed space and the algebraic commutant agree in size.

use dualsff::acceptance::{random_gate_pair, random_symmetric_pair};
use dualsff::commutant::{build_m_set, build_mn_set, build_mt_set, commutant_dimension};
use dualsff::gates::DisorderDistribution;
use dualsff::transfer::{leading_spectrum, QuadratureConfig, TransferContext};

fn count(ctx: &TransferContext) -> usize {
    let rep = leading_spectrum(ctx, 8).unwrap();
    assert!(!rep.ambiguous);
    rep.unimodular_count
}

#[test]
fn unitary_class_counts_match() {
    let dist = DisorderDistribution::default_for(2, false).unwrap();
    let quad = QuadratureConfig::default();
    for t in 1..=2 {
        let (u, w) = random_gate_pair(2, 70 + t as u64, 0).unwrap();
        let ctx = TransferContext::new(&u, &w, t, &dist, &quad).unwrap();
        assert_eq!(
            count(&ctx),
            commutant_dimension(&build_m_set(t, 2).unwrap())
                .unwrap()
                .dimension
        );
    }
}

#[test]
fn qutrit_counts_match() {
    let dist = DisorderDistribution::default_for(3, false).unwrap();
    let (u, w) = random_gate_pair(3, 5, 0).unwrap();
    let ctx = TransferContext::new(&u, &w, 1, &dist, &QuadratureConfig::default()).unwrap();
    assert_eq!(
        count(&ctx),
        commutant_dimension(&build_m_set(1, 3).unwrap())
            .unwrap()
            .dimension
    );
}

#[test]
fn time_reversal_counts_match() {
    let dist = DisorderDistribution::default_for(2, true).unwrap();
    let quad = QuadratureConfig::default();
    for t in 1..=2 {
        let (u, w) = random_symmetric_pair(80 + t as u64, 0).unwrap();
        let ctx = TransferContext::new(&u, &w, t, &dist, &quad).unwrap();
        assert_eq!(
            count(&ctx),
            commutant_dimension(&build_mt_set(t, 2).unwrap())
                .unwrap()
                .dimension
        );
    }
}

#[test]
fn second_moment_counts_match() {
    let dist = DisorderDistribution::default_for(2, false).unwrap();
    let (u, w) = random_gate_pair(2, 23, 5).unwrap();
    let ctx =
        TransferContext::with_copies(&u, &w, 1, 2, &dist, &QuadratureConfig::default()).unwrap();
    assert_eq!(
        count(&ctx),
        commutant_dimension(&build_mn_set(1, 2, 2).unwrap())
            .unwrap()
            .dimension
    );
}
