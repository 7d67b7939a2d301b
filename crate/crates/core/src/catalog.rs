//! Built-in witness scenarios with their recorded verdicts.

use std::f64::consts::PI;

use crate::matrix::{Permutation, UnitaryMatrix};
use crate::scenario::{Params, Scenario, ScenarioKind, UnitarySpec};
use crate::sequence::{Sequence, TailRule};

fn uhf(name: &str, seq: Sequence<UnitaryMatrix>) -> Scenario {
    Scenario::new(name, ScenarioKind::UhfProduct { sequence: seq }, Params::default())
}

fn diag(name: &str, seq: Sequence<Permutation>) -> Scenario {
    Scenario::new(name, ScenarioKind::DiagonalProduct { sequence: seq }, Params::default())
}

/// Witness scenarios, in a fixed order. Every entry records the verdict it
/// must reproduce.
pub fn witness_catalog() -> Vec<Scenario> {
    let id = UnitaryMatrix::identity(2);
    let x = UnitaryMatrix::pauli_x();
    let h = UnitaryMatrix::hadamard();
    let s_gate = UnitaryMatrix::diag_phases(&[0.0, PI / 2.0]);
    let flip = Permutation::transposition(2, 0, 1);
    let p_id = Permutation::identity(2);

    let inner = Sequence::new(2, vec![h.clone(), s_gate.clone()], TailRule::Constant(id.clone()))
        .expect("catalog sequence");
    let bogolubov = Sequence::constant(2, x.clone()).expect("catalog sequence");
    let alternating =
        Sequence::new(2, vec![], TailRule::Periodic(vec![id.clone(), x.clone()])).expect("catalog sequence");
    let samples: Vec<UnitaryMatrix> = (1..=13)
        .map(|k| UnitaryMatrix::diag_phases(&[0.0, PI / 2f64.powi(k)]))
        .collect();
    let phases = Sequence::new(2, vec![], TailRule::Sampled(samples)).expect("catalog sequence");
    let transpositions =
        Sequence::new(2, vec![], TailRule::Periodic(vec![flip.clone(), p_id.clone()])).expect("catalog sequence");
    let constant_flip = Sequence::new(2, vec![p_id.clone()], TailRule::Constant(flip.clone()))
        .expect("catalog sequence");

    // Level-1 qutrit unitary: cyclic shift with phases.
    let shift = Permutation::from_one_based(&[2, 3, 1]).expect("catalog permutation");
    let qutrit = crate::matrix::permutation_matrix(&shift)
        .mul(&UnitaryMatrix::diag_phases(&[0.3, -1.1, 2.0]))
        .matrix()
        .clone();
    let qutrit_u = UnitarySpec::Matrix {
        n: 3,
        level: 1,
        matrix: qutrit,
    };

    let peel_seq = Sequence::new(2, vec![h.clone()], TailRule::Constant(s_gate.clone()))
        .expect("catalog sequence");
    let residual = UnitarySpec::Matrix {
        n: 2,
        level: 1,
        matrix: h.mul(&s_gate).matrix().clone(),
    };
    let peel_params = Params {
        depth: 2,
        k_max: 2,
        ..Params::default()
    };

    vec![
        uhf("inner_hadamard_phase", inner).expecting("extensible_exact", Some("inner")),
        uhf("bogolubov_constant_X", bogolubov).expecting("extensible_exact", Some("outer")),
        uhf("alternating_identity_x", alternating).expecting("not_extensible", Some("outer")),
        uhf("diagonal_phase_sampled", phases).expecting("extensible_numeric", None),
        diag("diagonal_alternating_transposition", transpositions).expecting("not_extensible", None),
        diag("diagonal_constant_flip", constant_flip).expecting("extensible_permutation", None),
        Scenario::new("inner_qutrit_shift", ScenarioKind::Inner { u: qutrit_u }, Params::default())
            .expecting("verified", None),
        Scenario::new(
            "peel_planted_residual",
            ScenarioKind::Peel {
                sequence: peel_seq,
                residual: Some(residual),
            },
            peel_params,
        )
        .expecting("peeled", None),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::run_scenario;

    #[test]
    fn every_entry_matches_its_record() {
        for s in witness_catalog() {
            let r = run_scenario(&s).unwrap_or_else(|e| panic!("{}: {e}", s.name));
            assert_eq!(r.expected_match, Some(true), "{}: {:?}", s.name, r.verdict());
        }
    }
}
