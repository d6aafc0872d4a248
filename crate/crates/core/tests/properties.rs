//! Randomized invariants across circuits, estimators and transfer matrices.

use dualsff::circuit::{apply_floquet, floquet_operator, trace_power, CircuitSpec, TraceMethod};
use dualsff::gates::{
    build_dual_gate, build_time_reversal_gate, haar_unitary, sample_realization, sample_rng,
    DensityKind, DisorderDistribution, DualGateParams,
};
use dualsff::linalg::{max_abs_diff, random_vector, C64};
use dualsff::sff::{coe_sff, cue_sff, estimate_from_samples, pool, trace_samples_range};
use dualsff::transfer::{leading_spectrum, max_growth, QuadratureConfig, TransferContext};
use proptest::prelude::*;

fn gates(
    seed: u64,
    range: (f64, f64),
) -> (
    dualsff::algebra::DenseOperator,
    dualsff::algebra::DenseOperator,
) {
    let mut rng = sample_rng(seed, 1);
    let u = build_dual_gate(&DualGateParams::random(2, range, &mut rng), 2).unwrap();
    let w = build_dual_gate(&DualGateParams::random(2, range, &mut rng), 2).unwrap();
    (u, w)
}

fn kind(box_kind: bool) -> DensityKind {
    if box_kind {
        DensityKind::Box
    } else {
        DensityKind::Gaussian
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn floquet_operator_is_unitary_and_paths_agree(seed in 0u64..1000, cells in 1usize..4, width in 0.05f64..0.6, b: bool) {
        let (u, w) = gates(seed, (0.0, std::f64::consts::PI));
        let dist = DisorderDistribution::isotropic(2, kind(b), width, false).unwrap();
        let spec = CircuitSpec::homogeneous(2, cells, u, w, dist.clone()).unwrap();
        let r = sample_realization(&dist, cells, seed, 3);
        let f = floquet_operator(&spec, &r).unwrap();
        prop_assert!(f.unitarity_residual() < 1e-10);
        let v = random_vector(f.dim(), &mut sample_rng(seed, 2));
        let dense: Vec<C64> = (f.matrix() * dualsff::linalg::CVec::from_vec(v.clone())).iter().cloned().collect();
        let free = apply_floquet(&v, &spec, &r).unwrap();
        let diff = dense.iter().zip(&free).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(diff < 1e-10);
        for t in 1..=2 {
            let a = trace_power(&spec, &r, t, TraceMethod::Dense).unwrap();
            let c = trace_power(&spec, &r, t, TraceMethod::Column).unwrap();
            let s = trace_power(&spec, &r, t, TraceMethod::Sweep).unwrap();
            prop_assert!((a - c).norm() < 1e-9 && (a - s).norm() < 1e-9);
        }
    }

    #[test]
    fn time_reversal_gates_symmetric_and_dual(seed in 0u64..1000, coupling in -3.0f64..3.0) {
        let mut rng = sample_rng(seed, 0);
        let g = build_time_reversal_gate(&haar_unitary(3, &mut rng), &haar_unitary(3, &mut rng), coupling, 3).unwrap();
        prop_assert!(max_abs_diff(g.matrix(), &g.matrix().transpose()) < 1e-12);
        prop_assert!(dualsff::gates::is_dual_unitary(&g, 1e-10).unwrap().passes);
    }

    #[test]
    fn estimates_reproducible_and_batches_pool(seed in 0u64..1000, split in 3u64..37) {
        let (u, w) = gates(seed, (0.3, 2.8));
        let dist = DisorderDistribution::default_for(2, false).unwrap();
        let spec = CircuitSpec::homogeneous(2, 2, u, w, dist).unwrap();
        let all = trace_samples_range(&spec, 2, 0..40, seed, TraceMethod::Auto).unwrap();
        let again = trace_samples_range(&spec, 2, 0..40, seed, TraceMethod::Auto).unwrap();
        prop_assert_eq!(&all, &again);
        let a = estimate_from_samples(&all[..split as usize], 1).unwrap();
        let b = estimate_from_samples(&all[split as usize..], 1).unwrap();
        let full = estimate_from_samples(&all, 1).unwrap();
        let pooled = pool(&[a, b]).unwrap();
        prop_assert!((pooled.mean - full.mean).abs() < 1e-12 * full.mean.max(1.0));
        prop_assert!((pooled.std_error - full.std_error).abs() < 1e-10 * full.std_error.max(1.0));
    }

    #[test]
    fn transfer_matrix_never_grows(seed in 0u64..1000, width in 0.05f64..0.5, b: bool, tr: bool) {
        let (u, w) = if tr {
            let mut rng = sample_rng(seed, 4);
            let mut g = || build_time_reversal_gate(&haar_unitary(2, &mut rng), &haar_unitary(2, &mut rng), 1.3, 2).unwrap();
            (g(), g())
        } else {
            gates(seed, (0.0, std::f64::consts::PI))
        };
        let dist = DisorderDistribution::isotropic(2, kind(b), width, tr).unwrap();
        let ctx = TransferContext::new(&u, &w, 1, &dist, &QuadratureConfig::default()).unwrap();
        let rep = leading_spectrum(&ctx, 4).unwrap();
        prop_assert!(rep.spectral_radius <= 1.0 + 1e-8);
        let v = random_vector(ctx.dim(), &mut sample_rng(seed, 5));
        prop_assert!(max_growth(&ctx, &v, 200).unwrap() <= 1.0 + 1e-6);
    }

    #[test]
    fn references_nondecreasing_in_t(n in 1usize..60, t in 0usize..80) {
        prop_assert!(cue_sff(t + 1, n) >= cue_sff(t, n) || t == 0);
        if t >= 1 {
            prop_assert!(coe_sff(t + 1, n) >= coe_sff(t, n) - 1e-12);
        }
    }
}

#[test]
fn clean_limit_has_no_variance() {
    let (u, w) = gates(5, (0.3, 2.8));
    let dist = DisorderDistribution::isotropic(2, DensityKind::Gaussian, 1e-9, false).unwrap();
    let spec = CircuitSpec::homogeneous(2, 2, u, w, dist).unwrap();
    let clean = dualsff::gates::DisorderRealization::clean(spec.positions(), 2);
    let exact = trace_power(&spec, &clean, 2, TraceMethod::Dense)
        .unwrap()
        .norm_sqr();
    let samples = trace_samples_range(&spec, 2, 0..20, 3, TraceMethod::Dense).unwrap();
    let est = estimate_from_samples(&samples, 1).unwrap();
    assert!((est.mean - exact).abs() < 1e-6 * exact.max(1.0));
    assert!(est.std_error < 1e-6);
}
