//! Product-type automorphisms of the diagonal: slotwise permutations of
//! infinite words, and their extension to permutation endomorphisms.
//!
//! Slot `k ≥ 0` (the copy `φ^k(D^1)`) is acted on by `σ_(k) = σ_{k+1}`.
//! The extension is `w = w_1 φ(w_2) ⋯ φ^r(w_{r+1})` with
//! `w_1 = P(σ_(0))` and `w_{k+1} = P(σ_(k)) P(σ_(k−1))⁻¹`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{permutation_matrix, Permutation, ONE};
use crate::sequence::{PermutationSequence, TailRule, UnitarySequence};
use crate::tolerance::WORD_EQ_TOL;
use crate::words::{words, Lambda, Multiindex, WordPolynomial};

/// A finite word addressing the projection `S_x S_x*`.
pub type CylinderWord = Multiindex;

/// Reading of the extension criterion: the slot action is eventually
/// constant (not eventually the identity).
pub const EVENTUAL_READING: &str = "eventually_constant";

/// Letterwise image `(σ_1(x_1), …, σ_k(x_k))`.
pub fn act_on_word(seq: &PermutationSequence, x: &CylinderWord) -> Result<CylinderWord> {
    seq.require_depth(x.len())?;
    x.letters()
        .iter()
        .enumerate()
        .map(|(j, &l)| Ok(seq.factor_at(j + 1)?.apply(l as usize) as u8))
        .collect::<Result<Vec<u8>>>()
        .map(Multiindex::new)
}

/// `w_1, …, w_{k+1}` as permutations.
pub fn telescoped_factors(seq: &PermutationSequence, k: usize) -> Result<Vec<Permutation>> {
    let mut out = vec![seq.factor_at(1)?.clone()];
    for j in 1..=k {
        out.push(seq.factor_at(j + 1)?.compose(&seq.factor_at(j)?.inverse()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum DiagonalVerdict {
    ExtensiblePermutation {
        r: usize,
        w_factors: Vec<Permutation>,
        w_word: WordPolynomial,
    },
    /// `σ_k ≠ σ_{k+1}` and the pair recurs under the tail rule.
    NotExtensible {
        witness_indices: (usize, usize),
    },
    /// Sampled tail; `violations` lists `k` with `σ_k ≠ σ_{k+1}` in the window.
    Inconclusive {
        window: usize,
        violations: Vec<usize>,
    },
}

impl DiagonalVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            DiagonalVerdict::ExtensiblePermutation { .. } => "extensible_permutation",
            DiagonalVerdict::NotExtensible { .. } => "not_extensible",
            DiagonalVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

fn word_product(n: usize, factors: &[Permutation]) -> Result<WordPolynomial> {
    let mut acc = WordPolynomial::one(n);
    for (j, p) in factors.iter().enumerate() {
        let w = WordPolynomial::from_matrix(n, 1, permutation_matrix(p).matrix())?;
        acc = acc.multiply(&w.phi_pow(j))?;
    }
    Ok(acc)
}

pub fn decide_extension(seq: &PermutationSequence) -> Result<DiagonalVerdict> {
    let r = seq.prefix().len();
    match seq.tail() {
        TailRule::Constant(_) => extensible(seq, r),
        TailRule::Periodic(cycle) => {
            let p = cycle.len();
            match (0..p).find(|&j| cycle[j] != cycle[(j + 1) % p]) {
                None => extensible(seq, r),
                Some(j) => Ok(DiagonalVerdict::NotExtensible {
                    witness_indices: (r + 1 + j, r + 2 + j),
                }),
            }
        }
        TailRule::Sampled(_) => {
            let depth = seq.depth().unwrap_or(0);
            let violations = (1..depth)
                .filter(|&k| seq.factor_at(k).ok() != seq.factor_at(k + 1).ok())
                .collect();
            Ok(DiagonalVerdict::Inconclusive {
                window: depth,
                violations,
            })
        }
    }
}

fn extensible(seq: &PermutationSequence, r: usize) -> Result<DiagonalVerdict> {
    let w_factors = telescoped_factors(seq, r)?;
    let w_word = word_product(seq.alphabet(), &w_factors)?;
    Ok(DiagonalVerdict::ExtensiblePermutation {
        r,
        w_factors,
        w_word,
    })
}

/// The symbolic product `w_1 φ(w_2) ⋯ φ^r(w_{r+1})`.
pub fn build_permutation_unitary(verdict: &DiagonalVerdict) -> Result<WordPolynomial> {
    match verdict {
        DiagonalVerdict::ExtensiblePermutation { w_factors, w_word, .. } => {
            word_product(w_word.alphabet(), w_factors)
        }
        other => Err(Error::Contract(format!(
            "no permutation unitary for a {} verdict",
            other.kind()
        ))),
    }
}

/// The unitary sequence `u_k = P(σ_k)` used for cross-checks against the
/// UHF analyzer.
pub fn as_unitary_sequence(seq: &PermutationSequence) -> Result<UnitarySequence> {
    let tail = match seq.tail() {
        TailRule::Constant(s) => TailRule::Constant(permutation_matrix(s)),
        TailRule::Periodic(c) => TailRule::Periodic(c.iter().map(permutation_matrix).collect()),
        TailRule::Sampled(c) => TailRule::Sampled(c.iter().map(permutation_matrix).collect()),
    };
    UnitarySequence::new(
        seq.alphabet(),
        seq.prefix().iter().map(permutation_matrix).collect(),
        tail,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalVerification {
    pub depth: usize,
    pub checked: usize,
    pub passed: bool,
    /// First word (1-based) whose projection is mapped incorrectly.
    pub counterexample: Option<Vec<usize>>,
}

/// Checks `λ_w(S_x S_x*) = S_{σ(x)} S_{σ(x)}*` for every word of length
/// `1..=depth`, with exact coefficients.
pub fn verify_diagonal_extension(
    w: &WordPolynomial,
    seq: &PermutationSequence,
    depth: usize,
) -> Result<DiagonalVerification> {
    let n = seq.alphabet();
    let mut lam = Lambda::new(w)?;
    let mut checked = 0;
    for len in 1..=depth {
        for x in words(n, len) {
            let img = lam.apply(&WordPolynomial::projection(n, &x))?;
            let expect = WordPolynomial::projection(n, &act_on_word(seq, &x)?);
            checked += 1;
            if !img.eq_exact(&expect) {
                return Ok(DiagonalVerification {
                    depth,
                    checked,
                    passed: false,
                    counterexample: Some(x.one_based()),
                });
            }
        }
    }
    Ok(DiagonalVerification {
        depth,
        checked,
        passed: true,
        counterexample: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub depth: usize,
    pub fixes_diagonal: bool,
    pub v_in_diagonal: bool,
    /// First projection (1-based word) moved by `λ_v`.
    pub counterexample: Option<Vec<usize>>,
}

/// Whether `λ_v` fixes every cylinder projection up to `depth`, and whether
/// `v` itself is diagonal. Fixing the diagonal to depth `level(v) + 1`
/// forces `v` into the diagonal; a violation is an internal error.
pub fn fixed_point_test(v: &WordPolynomial, depth: usize) -> Result<FixedPointReport> {
    let n = v.alphabet();
    let mut lam = Lambda::new(v)?;
    let mut counterexample = None;
    'outer: for len in 1..=depth {
        for x in words(n, len) {
            let p = WordPolynomial::projection(n, &x);
            if !lam.apply(&p)?.approx_eq(&p, WORD_EQ_TOL) {
                counterexample = Some(x.one_based());
                break 'outer;
            }
        }
    }
    let level = v.level();
    let v_in_diagonal = v
        .normalize_to_level(level)
        .terms()
        .all(|t| t.alpha == t.beta || t.coeff.norm() <= WORD_EQ_TOL);
    let fixes_diagonal = counterexample.is_none();
    if fixes_diagonal && depth > level && !v_in_diagonal {
        return Err(Error::InternalConsistency(format!(
            "λ_v fixes the diagonal to depth {depth} but v (level {level}) is not diagonal"
        )));
    }
    Ok(FixedPointReport {
        depth,
        fixes_diagonal,
        v_in_diagonal,
        counterexample,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMap {
    pub length: usize,
    /// Each word (1-based) with the words of its image, padded to a common
    /// length.
    pub relation: Vec<(Vec<usize>, Vec<Vec<usize>>)>,
    pub injective: bool,
    pub surjective: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalAction {
    pub level_maps: Vec<LevelMap>,
}

fn is_permutation_unitary(w: &WordPolynomial) -> bool {
    w.is_balanced()
        && w.terms().all(|t| t.coeff == ONE)
        && matches!(w.unitarity_defect(), Ok(d) if d == 0.0)
}

/// The relation induced by `λ_w` on cylinder words of each length up to
/// `depth`. This is finite-level evidence only.
pub fn perm_endo_diagonal_action(w: &WordPolynomial, depth: usize) -> Result<DiagonalAction> {
    if !is_permutation_unitary(w) {
        return Err(Error::validation("w is not a permutation unitary"));
    }
    let n = w.alphabet();
    let mut lam = Lambda::new(w)?;
    let mut level_maps = Vec::new();
    for len in 1..=depth {
        let mut images = Vec::new();
        for x in words(n, len) {
            let img = lam.apply(&WordPolynomial::projection(n, &x))?;
            images.push((x, img));
        }
        let common = images.iter().map(|(_, img)| img.level()).max().unwrap_or(0);
        let mut relation = Vec::new();
        let mut sets: Vec<BTreeSet<Multiindex>> = Vec::new();
        for (x, img) in &images {
            let padded = img.normalize_to_level(common);
            let mut set = BTreeSet::new();
            for t in padded.terms() {
                if t.alpha != t.beta || t.coeff != ONE {
                    return Err(Error::Domain(format!(
                        "λ_w(S_{x}S_{x}*) is not a sum of diagonal projections"
                    )));
                }
                set.insert(t.alpha);
            }
            relation.push((x.one_based(), set.iter().map(Multiindex::one_based).collect()));
            sets.push(set);
        }
        let total: usize = sets.iter().map(BTreeSet::len).sum();
        let union: BTreeSet<&Multiindex> = sets.iter().flatten().collect();
        let injective = sets.iter().all(|s| !s.is_empty()) && union.len() == total;
        let surjective = sets.iter().all(|s| {
            let mut prefixes = s.iter().map(|y| y.split_at(len.min(y.len())).0);
            match prefixes.next() {
                Some(first) => prefixes.all(|p| p == first),
                None => true,
            }
        });
        level_maps.push(LevelMap {
            length: len,
            relation,
            injective,
            surjective,
        });
    }
    Ok(DiagonalAction { level_maps })
}
