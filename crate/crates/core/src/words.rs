//! Normal-form polynomials in the Cuntz generators.
//!
//! A polynomial is a finite sum of monomials `c·S_α S_β*`; the pair
//! `(α, β)` is the storage key. Multiplication uses the rule
//!
//! ```text
//! S_α S_β* · S_γ S_δ* = S_{αγ''} S_δ*   if γ = βγ''
//!                     = S_α S_{δβ''}*   if β = γβ''
//!                     = 0               otherwise
//! ```
//!
//! which terminates and never grows a word past the longer input. The unit
//! relation `Σ_i S_i S_i* = 1` is applied only by explicit normalization
//! (padding every term to a common length), so two polynomials that are
//! equal in `O_n` may have different keys until both are normalized.
//!
//! Letters are 0-based in the API (`0..n`) and printed/serialized 1-based.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, C64, ONE, ZERO};
use crate::tolerance::{DEFAULT_MAX_DIM, PRUNE_TOL, VALIDATION_TOL};

/// A finite word over the alphabet `{0..n}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Multiindex(Vec<u8>);

impl Multiindex {
    pub fn empty() -> Self {
        Multiindex(Vec::new())
    }

    pub fn new(letters: Vec<u8>) -> Self {
        Multiindex(letters)
    }

    pub fn from_slice(letters: &[u8]) -> Self {
        Multiindex(letters.to_vec())
    }

    /// Parses 1-based letters.
    pub fn from_one_based(letters: &[usize], n: usize) -> Result<Self> {
        letters
            .iter()
            .map(|&l| {
                if l == 0 || l > n {
                    Err(Error::validation(format!("letter {l} outside 1..={n}")))
                } else {
                    Ok((l - 1) as u8)
                }
            })
            .collect::<Result<Vec<u8>>>()
            .map(Multiindex)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|&l| l as usize + 1).collect()
    }

    pub fn concat(&self, other: &Multiindex) -> Multiindex {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Multiindex(v)
    }

    pub fn push(&self, letter: u8) -> Multiindex {
        let mut v = self.0.clone();
        v.push(letter);
        Multiindex(v)
    }

    pub fn prepend(&self, letter: u8) -> Multiindex {
        let mut v = Vec::with_capacity(self.0.len() + 1);
        v.push(letter);
        v.extend_from_slice(&self.0);
        Multiindex(v)
    }

    pub fn starts_with(&self, prefix: &Multiindex) -> bool {
        self.0.starts_with(&prefix.0)
    }

    pub fn split_at(&self, k: usize) -> (Multiindex, Multiindex) {
        let (a, b) = self.0.split_at(k);
        (Multiindex(a.to_vec()), Multiindex(b.to_vec()))
    }

    /// Position of this word among words of the same length, first letter
    /// most significant. This is the row/column index of the matrix unit.
    pub fn index(&self, n: usize) -> usize {
        self.0.iter().fold(0, |acc, &l| acc * n + l as usize)
    }

    pub fn from_index(mut index: usize, len: usize, n: usize) -> Multiindex {
        let mut v = vec![0u8; len];
        for slot in v.iter_mut().rev() {
            *slot = (index % n) as u8;
            index /= n;
        }
        Multiindex(v)
    }
}

impl fmt::Display for Multiindex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        for &l in &self.0 {
            write!(f, "{}", l as usize + 1)?;
        }
        Ok(())
    }
}

/// All words of length `len` in index order.
pub fn words(n: usize, len: usize) -> impl Iterator<Item = Multiindex> {
    let count = n.pow(len as u32);
    (0..count).map(move |i| Multiindex::from_index(i, len, n))
}

/// `c·S_α S_β*`.
#[derive(Clone, Debug, PartialEq)]
pub struct WordMonomial {
    pub coeff: C64,
    pub alpha: Multiindex,
    pub beta: Multiindex,
}

type Key = (Multiindex, Multiindex);

#[derive(Clone, PartialEq)]
pub struct WordPolynomial {
    n: usize,
    terms: BTreeMap<Key, C64>,
}

impl fmt::Debug for WordPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "WordPolynomial(n={}, {})", self.n, self)
    }
}

impl fmt::Display for WordPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, ((a, b), c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.6}{:+.6}i)", c.re, c.im)?;
            if !a.is_empty() {
                write!(f, "·S_{a}")?;
            }
            if !b.is_empty() {
                write!(f, "·S_{b}*")?;
            }
            if a.is_empty() && b.is_empty() {
                write!(f, "·1")?;
            }
        }
        Ok(())
    }
}

fn check_alphabet(n: usize) -> Result<()> {
    if (2..=255).contains(&n) {
        Ok(())
    } else {
        Err(Error::validation(format!("alphabet size {n} outside 2..=255")))
    }
}

impl WordPolynomial {
    pub fn zero(n: usize) -> Self {
        WordPolynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(n: usize) -> Self {
        Self::scalar(n, ONE)
    }

    pub fn scalar(n: usize, z: C64) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Multiindex::empty(), Multiindex::empty(), z);
        p
    }

    pub fn monomial(n: usize, alpha: Multiindex, beta: Multiindex, coeff: C64) -> Result<Self> {
        check_alphabet(n)?;
        for w in [&alpha, &beta] {
            if w.letters().iter().any(|&l| l as usize >= n) {
                return Err(Error::validation(format!("word {w} uses a letter beyond {n}")));
            }
        }
        let mut p = Self::zero(n);
        p.add_term(alpha, beta, coeff);
        Ok(p)
    }

    /// The generator `S_i` (0-based).
    pub fn generator(n: usize, i: u8) -> Self {
        let mut p = Self::zero(n);
        p.add_term(Multiindex::new(vec![i]), Multiindex::empty(), ONE);
        p
    }

    /// The matrix unit `S_α S_β*`.
    pub fn unit(n: usize, alpha: &Multiindex, beta: &Multiindex) -> Self {
        let mut p = Self::zero(n);
        p.add_term(alpha.clone(), beta.clone(), ONE);
        p
    }

    /// The diagonal projection `S_α S_α*`.
    pub fn projection(n: usize, alpha: &Multiindex) -> Self {
        Self::unit(n, alpha, alpha)
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = WordMonomial> + '_ {
        self.terms.iter().map(|((a, b), &c)| WordMonomial {
            coeff: c,
            alpha: a.clone(),
            beta: b.clone(),
        })
    }

    pub fn coeff(&self, alpha: &Multiindex, beta: &Multiindex) -> C64 {
        self.terms
            .get(&(alpha.clone(), beta.clone()))
            .copied()
            .unwrap_or(ZERO)
    }

    fn add_term(&mut self, alpha: Multiindex, beta: Multiindex, c: C64) {
        if c == ZERO {
            return;
        }
        let key = (alpha, beta);
        let remove = match self.terms.get_mut(&key) {
            Some(slot) => {
                *slot += c;
                *slot == ZERO
            }
            None => {
                self.terms.insert(key.clone(), c);
                false
            }
        };
        if remove {
            self.terms.remove(&key);
        }
    }

    fn same_alphabet(&self, other: &Self) -> Result<()> {
        if self.n == other.n {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "alphabet mismatch: {} vs {}",
                self.n, other.n
            )))
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_alphabet(other)?;
        let mut out = self.clone();
        for ((a, b), &c) in &other.terms {
            out.add_term(a.clone(), b.clone(), c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scale(-ONE))
    }

    pub fn scale(&self, z: C64) -> Self {
        let mut out = Self::zero(self.n);
        for ((a, b), &c) in &self.terms {
            out.add_term(a.clone(), b.clone(), c * z);
        }
        out
    }

    /// Bilinear extension of the monomial product rule.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.same_alphabet(other)?;
        let mut out = Self::zero(self.n);
        for ((a, b), &c1) in &self.terms {
            // Right factors whose alpha is a proper prefix of b: b = γβ''.
            for p in 0..b.len() {
                let prefix = Multiindex::from_slice(&b.letters()[..p]);
                let rest = Multiindex::from_slice(&b.letters()[p..]);
                let start = (prefix.clone(), Multiindex::empty());
                for ((g, d), &c2) in other.terms.range(start..) {
                    if *g != prefix {
                        break;
                    }
                    out.add_term(a.clone(), d.concat(&rest), c1 * c2);
                }
            }
            // Right factors whose alpha extends b: γ = bγ''.
            let start = (b.clone(), Multiindex::empty());
            for ((g, d), &c2) in other.terms.range(start..) {
                if !g.starts_with(b) {
                    break;
                }
                let tail = Multiindex::from_slice(&g.letters()[b.len()..]);
                out.add_term(a.concat(&tail), d.clone(), c1 * c2);
            }
        }
        Ok(out)
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zero(self.n);
        for ((a, b), &c) in &self.terms {
            out.add_term(b.clone(), a.clone(), c.conj());
        }
        out
    }

    /// The canonical endomorphism `x ↦ Σ_i S_i x S_i*`.
    pub fn phi(&self) -> Self {
        let mut out = Self::zero(self.n);
        for ((a, b), &c) in &self.terms {
            for i in 0..self.n as u8 {
                out.add_term(a.prepend(i), b.prepend(i), c);
            }
        }
        out
    }

    pub fn phi_pow(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |acc, _| acc.phi())
    }

    pub fn is_balanced(&self) -> bool {
        self.terms.keys().all(|(a, b)| a.len() == b.len())
    }

    /// Longest word length appearing in any term.
    pub fn level(&self) -> usize {
        self.terms
            .keys()
            .map(|(a, b)| a.len().max(b.len()))
            .max()
            .unwrap_or(0)
    }

    /// Pads every term with the unit relation until both of its words have
    /// length at least `level`, then drops coefficients below the pruning
    /// threshold.
    pub fn normalize_to_level(&self, level: usize) -> Self {
        let mut out = Self::zero(self.n);
        for ((a, b), &c) in &self.terms {
            let short = a.len().min(b.len());
            if short >= level {
                out.add_term(a.clone(), b.clone(), c);
                continue;
            }
            for tail in words(self.n, level - short) {
                out.add_term(a.concat(&tail), b.concat(&tail), c);
            }
        }
        out.terms.retain(|_, c| c.norm() >= PRUNE_TOL);
        out
    }

    /// Smallest level at which every term is padded; two polynomials agree
    /// in `O_n` iff their normalizations at a common such level agree.
    fn canonical_level(&self) -> usize {
        self.terms
            .keys()
            .map(|(a, b)| a.len().min(b.len()))
            .max()
            .unwrap_or(0)
    }

    /// Largest coefficient of `self − other` after normalizing both to their
    /// common canonical level.
    pub fn distance_coeffwise(&self, other: &Self) -> Result<f64> {
        let diff = self.sub(other)?;
        let level = self.canonical_level().max(other.canonical_level());
        let mut padded = Self::zero(self.n);
        for ((a, b), &c) in &diff.terms {
            let short = a.len().min(b.len());
            if short >= level {
                padded.add_term(a.clone(), b.clone(), c);
            } else {
                for tail in words(self.n, level - short) {
                    padded.add_term(a.concat(&tail), b.concat(&tail), c);
                }
            }
        }
        Ok(padded.terms.values().map(|c| c.norm()).fold(0.0, f64::max))
    }

    /// Equality of normal forms with coefficient tolerance `tol`.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        matches!(self.distance_coeffwise(other), Ok(d) if d <= tol)
    }

    /// Equality of normal forms with exact coefficients.
    pub fn eq_exact(&self, other: &Self) -> bool {
        self.approx_eq(other, 0.0)
    }

    /// The element of level `k` whose matrix (in `M_{n^k}`, first tensor
    /// slot = first letter) is `m`.
    pub fn from_matrix(n: usize, k: usize, m: &ComplexMatrix) -> Result<Self> {
        check_alphabet(n)?;
        let dim = n.pow(k as u32);
        if m.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
        let mut out = Self::zero(n);
        for r in 0..dim {
            for c in 0..dim {
                let z = m[(r, c)];
                if z != ZERO {
                    out.terms.insert(
                        (Multiindex::from_index(r, k, n), Multiindex::from_index(c, k, n)),
                        z,
                    );
                }
            }
        }
        Ok(out)
    }

    /// Matrix of a balanced polynomial at level `k`; shorter terms are
    /// padded with the unit relation.
    pub fn to_matrix(&self, k: usize) -> Result<ComplexMatrix> {
        if !self.is_balanced() {
            return Err(Error::Domain("to_matrix needs a balanced polynomial".into()));
        }
        let level = self.level();
        if level > k {
            return Err(Error::DimensionMismatch {
                expected: k,
                found: level,
            });
        }
        let dim = self.n.pow(k as u32);
        if dim > DEFAULT_MAX_DIM {
            return Err(Error::Capacity {
                dim,
                max: DEFAULT_MAX_DIM,
            });
        }
        let mut m = ComplexMatrix::zeros(dim);
        for ((a, b), &c) in &self.terms {
            let pad = k - a.len();
            let block = self.n.pow(pad as u32);
            let (ra, rb) = (a.index(self.n) * block, b.index(self.n) * block);
            for t in 0..block {
                m[(ra + t, rb + t)] += c;
            }
        }
        Ok(m)
    }

    /// The normalized trace `τ(S_α S_β*) = δ_{αβ} n^{−|α|}`.
    pub fn tau(&self) -> Result<C64> {
        if !self.is_balanced() {
            return Err(Error::Domain("the trace is defined on balanced elements only".into()));
        }
        let n = self.n as f64;
        Ok(self
            .terms
            .iter()
            .filter(|((a, b), _)| a == b)
            .map(|((a, _), &c)| c * n.powi(-(a.len() as i32)))
            .sum())
    }

    /// The trace-preserving conditional expectation onto level `k`:
    /// identity on the first `k` letters, normalized trace on the rest.
    pub fn cond_expectation(&self, k: usize) -> Result<Self> {
        if !self.is_balanced() {
            return Err(Error::Domain(
                "the conditional expectation is defined on balanced elements only".into(),
            ));
        }
        let n = self.n as f64;
        let mut out = Self::zero(self.n);
        for ((a, b), &c) in &self.terms {
            if a.len() <= k {
                out.add_term(a.clone(), b.clone(), c);
                continue;
            }
            let (a1, a2) = a.split_at(k);
            let (b1, b2) = b.split_at(k);
            if a2 == b2 {
                out.add_term(a1, b1, c * n.powi(-(a2.len() as i32)));
            }
        }
        Ok(out)
    }

    /// `‖x x* − 1‖` and `‖x* x − 1‖` at the polynomial's own level.
    pub fn unitarity_defect(&self) -> Result<f64> {
        if !self.is_balanced() {
            return Err(Error::Domain(
                "unitarity is checked on balanced elements only".into(),
            ));
        }
        let m = self.to_matrix(self.level())?;
        let id = ComplexMatrix::identity(m.dim());
        let a = m.mul(&m.adjoint()).sub(&id).operator_norm()?;
        let b = m.adjoint().mul(&m).sub(&id).operator_norm()?;
        Ok(a.max(b))
    }
}

/// Images under `λ_v` with the unitaries `V_k = v φ(v) ⋯ φ^{k−1}(v)` cached.
pub struct Lambda {
    v: WordPolynomial,
    powers: Vec<WordPolynomial>,
    adjoints: Vec<WordPolynomial>,
}

impl Lambda {
    /// Checks that `v` is a balanced unitary (defect ≤ 1e−9).
    pub fn new(v: &WordPolynomial) -> Result<Self> {
        let defect = v
            .unitarity_defect()
            .map_err(|e| Error::precondition(format!("λ_v needs a finite-level unitary: {e}")))?;
        if defect > VALIDATION_TOL {
            return Err(Error::precondition(format!(
                "v is not unitary: defect {defect:e}"
            )));
        }
        let one = WordPolynomial::one(v.n);
        Ok(Lambda {
            v: v.clone(),
            powers: vec![one.clone()],
            adjoints: vec![one],
        })
    }

    pub fn unitary(&self) -> &WordPolynomial {
        &self.v
    }

    fn ensure(&mut self, k: usize) -> Result<()> {
        while self.powers.len() <= k {
            let last = self.powers.last().unwrap();
            let next = self.v.multiply(&last.phi())?;
            self.adjoints.push(next.adjoint());
            self.powers.push(next);
        }
        Ok(())
    }

    /// `V_k`.
    pub fn power(&mut self, k: usize) -> Result<&WordPolynomial> {
        self.ensure(k)?;
        Ok(&self.powers[k])
    }

    /// `λ_v(x)`, computed termwise as `V_{|α|} S_α S_β* V_{|β|}*`.
    pub fn apply(&mut self, x: &WordPolynomial) -> Result<WordPolynomial> {
        self.v.same_alphabet(x)?;
        let mut out = WordPolynomial::zero(x.n);
        for ((a, b), &c) in &x.terms {
            self.ensure(a.len().max(b.len()))?;
            let middle = WordPolynomial::unit(x.n, a, b).scale(c);
            let img = self.powers[a.len()]
                .multiply(&middle)?
                .multiply(&self.adjoints[b.len()])?;
            for ((ia, ib), &ic) in &img.terms {
                out.add_term(ia.clone(), ib.clone(), ic);
            }
        }
        Ok(out)
    }

    /// Confirms that `T_i = v S_i` satisfy `T_i* T_j = δ_ij` and
    /// `Σ_i T_i T_i* = 1`.
    pub fn check_relations(&self, tol: f64) -> Result<()> {
        let n = self.v.n;
        let ts: Vec<WordPolynomial> = (0..n as u8)
            .map(|i| self.v.multiply(&WordPolynomial::generator(n, i)))
            .collect::<Result<_>>()?;
        let one = WordPolynomial::one(n);
        let zero = WordPolynomial::zero(n);
        let mut sum = WordPolynomial::zero(n);
        for (i, ti) in ts.iter().enumerate() {
            for (j, tj) in ts.iter().enumerate() {
                let prod = ti.adjoint().multiply(tj)?;
                let target = if i == j { &one } else { &zero };
                let d = prod.distance_coeffwise(target)?;
                if d > tol {
                    return Err(Error::InternalConsistency(format!(
                        "T_{}* T_{} deviates from δ by {d:e}",
                        i + 1,
                        j + 1
                    )));
                }
            }
            sum = sum.add(&ti.multiply(&ti.adjoint())?)?;
        }
        let d = sum.distance_coeffwise(&one)?;
        if d > tol {
            return Err(Error::InternalConsistency(format!(
                "Σ T_i T_i* deviates from 1 by {d:e}"
            )));
        }
        Ok(())
    }
}

/// `λ_v(x)` for a finite-level unitary `v`. With `check`, the Cuntz
/// relations of the images `v S_i` are confirmed first.
pub fn lambda_apply(v: &WordPolynomial, x: &WordPolynomial, check: bool) -> Result<WordPolynomial> {
    let mut lam = Lambda::new(v)?;
    if check {
        lam.check_relations(1e-9)?;
    }
    lam.apply(x)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermRecord {
    alpha: Vec<usize>,
    beta: Vec<usize>,
    coeff: [f64; 2],
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyRecord {
    n: usize,
    terms: Vec<TermRecord>,
}

impl Serialize for WordPolynomial {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRecord {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|((a, b), c)| TermRecord {
                    alpha: a.one_based(),
                    beta: b.one_based(),
                    coeff: [c.re, c.im],
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for WordPolynomial {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rec = PolyRecord::deserialize(d)?;
        check_alphabet(rec.n).map_err(serde::de::Error::custom)?;
        let mut p = WordPolynomial::zero(rec.n);
        for t in rec.terms {
            let a = Multiindex::from_one_based(&t.alpha, rec.n).map_err(serde::de::Error::custom)?;
            let b = Multiindex::from_one_based(&t.beta, rec.n).map_err(serde::de::Error::custom)?;
            p.add_term(a, b, C64::new(t.coeff[0], t.coeff[1]));
        }
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::UnitaryMatrix;

    fn w(letters: &[u8]) -> Multiindex {
        Multiindex::from_slice(letters)
    }

    fn s(n: usize, i: u8) -> WordPolynomial {
        WordPolynomial::generator(n, i)
    }

    #[test]
    fn isometry_and_orthogonality() {
        let s1 = s(2, 0);
        let s2 = s(2, 1);
        assert!(s1.adjoint().multiply(&s1).unwrap().eq_exact(&WordPolynomial::one(2)));
        assert!(s1.adjoint().multiply(&s2).unwrap().is_zero());
    }

    #[test]
    fn alphabet_mismatch_is_rejected() {
        assert!(matches!(
            s(2, 0).multiply(&s(3, 0)),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn adjoint_examples() {
        let x = WordPolynomial::unit(2, &w(&[0]), &w(&[1]));
        assert_eq!(x.adjoint(), WordPolynomial::unit(2, &w(&[1]), &w(&[0])));
        let y = s(2, 0).scale(C64::i());
        let expect = WordPolynomial::monomial(2, w(&[]), w(&[0]), -C64::i()).unwrap();
        assert_eq!(y.adjoint(), expect);
    }

    #[test]
    fn phi_examples() {
        let one = WordPolynomial::one(2);
        assert!(one.phi().approx_eq(&one, 0.0));
        // phi(1) stores Σ S_iS_i*, which only equals 1 after normalization.
        assert_ne!(one.phi(), one);
        let p = WordPolynomial::projection(2, &w(&[0])).phi();
        let expect = WordPolynomial::projection(2, &w(&[0, 0]))
            .add(&WordPolynomial::projection(2, &w(&[1, 0])))
            .unwrap();
        assert_eq!(p, expect);
    }

    #[test]
    fn matrix_unit_correspondence() {
        let e12 = ComplexMatrix::from_real(2, &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(
            WordPolynomial::from_matrix(2, 1, &e12).unwrap(),
            WordPolynomial::unit(2, &w(&[0]), &w(&[1]))
        );
        let id = WordPolynomial::from_matrix(3, 1, &ComplexMatrix::identity(3)).unwrap();
        assert!(id.approx_eq(&WordPolynomial::one(3), 0.0));
        assert!(WordPolynomial::from_matrix(2, 2, &e12).is_err());
    }

    #[test]
    fn to_matrix_pads_short_terms() {
        let one = WordPolynomial::one(2);
        assert_eq!(one.to_matrix(2).unwrap(), ComplexMatrix::identity(4));
        assert!(s(2, 0).to_matrix(1).is_err());
        let deep = WordPolynomial::projection(2, &w(&[0, 1]));
        assert!(deep.to_matrix(1).is_err());
    }

    #[test]
    fn phi_is_identity_tensor() {
        let x = ComplexMatrix::from_fn(2, |r, c| C64::new(r as f64 + 1.0, c as f64));
        let p = WordPolynomial::from_matrix(2, 1, &x).unwrap();
        let expect = ComplexMatrix::identity(2).tensor(&x).unwrap();
        assert_eq!(p.phi().to_matrix(2).unwrap(), expect);
    }

    #[test]
    fn trace_values() {
        assert_eq!(WordPolynomial::one(2).tau().unwrap(), ONE);
        assert_eq!(
            WordPolynomial::projection(2, &w(&[0])).tau().unwrap(),
            C64::new(0.5, 0.0)
        );
        assert!(matches!(s(2, 0).tau(), Err(Error::Domain(_))));
    }

    #[test]
    fn conditional_expectation_cases() {
        let x = WordPolynomial::unit(2, &w(&[0, 1]), &w(&[1, 1]))
            .add(&WordPolynomial::unit(2, &w(&[0, 0]), &w(&[0, 1])))
            .unwrap();
        assert_eq!(x.cond_expectation(2).unwrap(), x);
        let e0 = x.cond_expectation(0).unwrap();
        assert!(e0.approx_eq(&WordPolynomial::scalar(2, x.tau().unwrap()), 0.0));
        let e1 = x.cond_expectation(1).unwrap();
        let expect = WordPolynomial::unit(2, &w(&[0]), &w(&[1])).scale(C64::new(0.5, 0.0));
        assert!(e1.eq_exact(&expect));
        assert!(s(2, 1).cond_expectation(1).is_err());
    }

    #[test]
    fn lambda_identity_and_level_one() {
        let x = WordPolynomial::unit(2, &w(&[0, 1]), &w(&[1]));
        let one = WordPolynomial::one(2);
        assert!(lambda_apply(&one, &x, true).unwrap().approx_eq(&x, 0.0));

        let h = UnitaryMatrix::hadamard();
        let v = WordPolynomial::from_matrix(2, 1, h.matrix()).unwrap();
        for i in 0..2u8 {
            for j in 0..2u8 {
                let e = WordPolynomial::unit(2, &w(&[i]), &w(&[j]));
                let img = lambda_apply(&v, &e, false).unwrap();
                let expect = v.multiply(&e).unwrap().multiply(&v.adjoint()).unwrap();
                assert!(img.approx_eq(&expect, 1e-15));
            }
        }
    }

    #[test]
    fn lambda_rejects_non_unitary() {
        let v = WordPolynomial::projection(2, &w(&[0]));
        assert!(matches!(Lambda::new(&v), Err(Error::Precondition(_))));
        assert!(matches!(Lambda::new(&s(2, 0)), Err(Error::Precondition(_))));
    }

    #[test]
    fn serde_uses_one_based_letters() {
        let p = WordPolynomial::unit(2, &w(&[0]), &w(&[1])).scale(C64::new(2.0, -1.0));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"n":2,"terms":[{"alpha":[1],"beta":[2],"coeff":[2.0,-1.0]}]}"#);
        let back: WordPolynomial = serde_json::from_str(&s).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<WordPolynomial>(
            r#"{"n":2,"terms":[{"alpha":[3],"beta":[],"coeff":[1,0]}]}"#
        )
        .is_err());
    }

    #[test]
    fn index_round_trip() {
        for idx in 0..27 {
            let m = Multiindex::from_index(idx, 3, 3);
            assert_eq!(m.index(3), idx);
        }
        assert_eq!(Multiindex::from_index(5, 3, 2), w(&[1, 0, 1]));
    }
}
