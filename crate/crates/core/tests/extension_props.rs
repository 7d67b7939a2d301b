mod common;

use std::f64::consts::PI;

use common::*;
use cuntz_core::error::Error;
use cuntz_core::extension::{
    analyze_extension, build_extension_unitary, cauchy_defects, gauge_compose, gauge_difference,
    inner_extension_unitary, peel_residuals, telescope, verify_against_inner,
    verify_extension_factors, ExtensionVerdict, Gauge,
};
use cuntz_core::matrix::{ComplexMatrix, UnitaryMatrix, C64};
use cuntz_core::product::ProductAutomorphism;
use cuntz_core::sequence::{Sequence, TailRule, UnitarySequence};
use cuntz_core::tolerance::Tolerances;
use cuntz_core::words::{lambda_apply, Multiindex, WordPolynomial};
use proptest::prelude::*;

fn sampled(n: usize, len: usize, seed: u64) -> Vec<UnitaryMatrix> {
    let mut r = rng(seed);
    (0..len).map(|_| random_unitary(n, &mut r)).collect()
}

fn tol() -> Tolerances {
    Tolerances::default()
}

#[test]
fn diagonal_phases_sampled_to_twenty() {
    let samples = (1..=21)
        .map(|k| UnitaryMatrix::diag_phases(&[0.0, PI / 2f64.powi(k)]))
        .collect();
    let seq = Sequence::new(2, vec![], TailRule::Sampled(samples)).unwrap();
    match analyze_extension(&seq, 20, &tol()).unwrap() {
        ExtensionVerdict::ExtensibleNumeric { tail_bound, .. } => {
            assert!(tail_bound <= PI / 2f64.powi(21) / 0.5, "{tail_bound:e}");
        }
        other => panic!("unexpected {}", other.kind()),
    }
}

#[test]
fn pauli_inner_extension_is_ad_x() {
    let x = WordPolynomial::from_matrix(2, 1, UnitaryMatrix::pauli_x().matrix()).unwrap();
    let v = inner_extension_unitary(&x).unwrap();
    let report = verify_against_inner(&v, &x, 3, 1e-12).unwrap();
    assert!(report.passed, "{:e}", report.max_deviation);
}

#[test]
fn gauge_examples() {
    let x = WordPolynomial::from_matrix(2, 1, UnitaryMatrix::pauli_x().matrix()).unwrap();
    let zx = gauge_compose(&x, C64::new(0.0, 1.0)).unwrap();
    let p = WordPolynomial::projection(2, &Multiindex::new(vec![0]));
    let a = lambda_apply(&x, &p, false).unwrap();
    let b = lambda_apply(&zx, &p, false).unwrap();
    assert!(a.eq_exact(&b));
    let theta = gauge_difference(&zx.to_matrix(1).unwrap(), &x.to_matrix(1).unwrap(), 1e-12).unwrap();
    assert!((theta - PI / 2.0).abs() <= 1e-12);
    assert!(gauge_compose(&x, C64::new(1.0, 0.0)).unwrap().eq_exact(&x));
    assert!(gauge_compose(&x, C64::new(2.0, 0.0)).is_err());
}

#[test]
fn random_unitary_is_not_telescoped() {
    let mut r = rng(41);
    let seq = constant_tail_sequence(2, 1, &mut r);
    let w = random_unitary(8, &mut r);
    match peel_residuals(w.matrix(), &seq, 1, 1e-9) {
        Err(Error::Structural { level, .. }) => assert_eq!(level, 1),
        other => panic!("unexpected {other:?}"),
    }
}

/// Periodic tail whose cycle differs by scalars only.
fn scalar_cycle_sequence(n: usize, seed: u64) -> UnitarySequence {
    let mut r = rng(seed);
    let c = random_unitary(n, &mut r);
    let prefix = (0..seed % 3).map(|_| random_unitary(n, &mut r)).collect();
    let cycle = (0..1 + seed % 3).map(|j| c.phase_shift(0.7 * j as f64 + 0.2)).collect();
    Sequence::new(n, prefix, TailRule::Periodic(cycle)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn delta_ignores_phases(seed in any::<u64>(), n in 2usize..4) {
        let base = sampled(n, 6, seed);
        let mut r = rng(seed ^ 3);
        let shifted: Vec<UnitaryMatrix> = base
            .iter()
            .map(|u| u.phase_shift(rand::Rng::gen_range(&mut r, -PI..PI)))
            .collect();
        let a = Sequence::new(n, vec![], TailRule::Sampled(base)).unwrap();
        let b = Sequence::new(n, vec![], TailRule::Sampled(shifted)).unwrap();
        let ta = telescope(&a, 5, 1e-9).unwrap();
        let tb = telescope(&b, 5, 1e-9).unwrap();
        for (x, y) in ta.iter().zip(&tb) {
            prop_assert!((x.delta() - y.delta()).abs() <= 1e-9);
        }
    }

    #[test]
    fn increments_equal_gauged_defects(seed in any::<u64>(), k in 1usize..4) {
        let seq = Sequence::new(2, vec![], TailRule::Sampled(sampled(2, 6, seed))).unwrap();
        let factors = telescope(&seq, k + 1, 1e-9).unwrap();
        let pk = cuntz_core::extension::build_extension_unitary_with_gauge(&seq, k, &tol(), Gauge::MinimalArc);
        let pk1 = cuntz_core::extension::build_extension_unitary_with_gauge(&seq, k + 1, &tol(), Gauge::MinimalArc);
        // Sampled windows of random unitaries may be inconclusive, which
        // does not prevent building partial products.
        let (pk, pk1) = match (pk, pk1) {
            (Ok(a), Ok(b)) => (a.to_matrix().unwrap(), b.to_matrix().unwrap()),
            _ => return Ok(()),
        };
        let diff = pk1.sub(&pk.tensor(&ComplexMatrix::identity(2)).unwrap()).operator_norm().unwrap();
        let delta = factors[k].delta();
        let defect = factors[k].gauged(Gauge::MinimalArc).matrix().distance(&ComplexMatrix::identity(2)).unwrap();
        prop_assert!((diff - delta).abs() <= 1e-10, "{} vs δ {}", diff, delta);
        prop_assert!((diff - defect).abs() <= 1e-10);
    }

    #[test]
    fn exact_verdicts_verify(seed in any::<u64>(), n in 2usize..4) {
        let seq = scalar_cycle_sequence(n, seed);
        let verdict = analyze_extension(&seq, 12, &tol()).unwrap();
        let v = match &verdict {
            ExtensionVerdict::ExtensibleExact { v, .. } => v.clone(),
            other => return Err(TestCaseError::fail(other.kind())),
        };
        let report = verify_extension_factors(&v, &ProductAutomorphism::new(seq), 3, 1e-10).unwrap();
        prop_assert!(report.passed, "{:e}", report.max_deviation);
    }

    #[test]
    fn not_extensible_witness_recurs(seed in any::<u64>(), n in 2usize..4) {
        let mut r = rng(seed);
        let m = (seed % 3) as usize;
        let prefix = (0..m).map(|_| random_unitary(n, &mut r)).collect();
        let cycle: Vec<UnitaryMatrix> = (0..2 + seed as usize % 2).map(|_| random_unitary(n, &mut r)).collect();
        let p = cycle.len();
        let seq = Sequence::new(n, prefix, TailRule::Periodic(cycle)).unwrap();
        let (w, bound) = match analyze_extension(&seq, 12, &tol()).unwrap() {
            ExtensionVerdict::NotExtensible { witness, lower_bound } => (witness, lower_bound),
            other => return Err(TestCaseError::fail(other.kind())),
        };
        prop_assert!(w.k > m && w.delta() >= bound && bound > 0.0);
        let later = telescope(&seq, w.k + 3 * p, 1e-9).unwrap();
        for j in 1..=3 {
            let again = &later[w.k + j * p - 1];
            prop_assert!(again.d.matrix().distance(w.d.matrix()).unwrap() <= 1e-12);
        }
        let defects = cauchy_defects(&seq, 12, 1e-9).unwrap();
        let window = &defects[defects.len() / 2..];
        prop_assert!(window.iter().cloned().fold(0.0, f64::max) >= bound - 1e-12);
    }

    #[test]
    fn peel_of_exact_tail_has_unit_trace(seed in any::<u64>(), n in 2usize..4) {
        let mut r = rng(seed);
        let seq = constant_tail_sequence(n, 0, &mut r);
        let w = build_extension_unitary(&seq, 2, &tol()).unwrap().to_matrix().unwrap();
        for t in peel_residuals(&w, &seq, 2, 1e-9).unwrap() {
            prop_assert!((t.tau_z - C64::new(1.0, 0.0)).norm() <= 1e-9);
        }
    }

    #[test]
    fn inner_extension_restricts_to_ad(seed in any::<u64>(), level in 1usize..3) {
        let u = random_unitary_word(2, level, &mut rng(seed));
        let v = inner_extension_unitary(&u).unwrap();
        let report = verify_against_inner(&v, &u, level + 1, 1e-10).unwrap();
        prop_assert!(report.passed, "{:e}", report.max_deviation);
    }
}
