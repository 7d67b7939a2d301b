//! Product-type automorphisms `α_u = ⊗_i Ad(u_i)` of the UHF core.
//!
//! Two evaluation paths are provided: conjugation by `u_1 ⊗ … ⊗ u_k` in
//! `M_{n^k}`, and the literal word expansion
//! `u_1 S_{α_1} ⋯ u_k S_{α_k} S_{β_k}* u_k* ⋯ S_{β_1}* u_1*`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::matrix::{tensor_all, ComplexMatrix, UnitaryMatrix};
use crate::sequence::UnitarySequence;
use crate::words::{Multiindex, WordPolynomial};

#[derive(Clone, Debug, PartialEq)]
pub struct ProductAutomorphism {
    seq: UnitarySequence,
}

impl ProductAutomorphism {
    pub fn new(seq: UnitarySequence) -> Self {
        ProductAutomorphism { seq }
    }

    pub fn sequence(&self) -> &UnitarySequence {
        &self.seq
    }

    pub fn alphabet(&self) -> usize {
        self.seq.alphabet()
    }

    /// `u_1 ⊗ … ⊗ u_k`; the 1×1 identity at `k = 0`.
    pub fn level_unitary(&self, k: usize) -> Result<ComplexMatrix> {
        let factors = self.seq.factors(k)?;
        if factors.is_empty() {
            return Ok(ComplexMatrix::identity(1));
        }
        tensor_all(factors.iter().map(UnitaryMatrix::matrix))
    }

    /// `Ad(u_1 ⊗ … ⊗ u_k)(m)` for `m` at level `k`.
    pub fn apply_level(&self, k: usize, m: &ComplexMatrix) -> Result<ComplexMatrix> {
        let dim = self.alphabet().pow(k as u32);
        if m.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: m.dim(),
            });
        }
        let u = self.level_unitary(k)?;
        Ok(u.mul(m).mul(&u.adjoint()))
    }

    /// Word-picture evaluation on a balanced polynomial.
    pub fn apply_via_words(&self, x: &WordPolynomial) -> Result<WordPolynomial> {
        let n = self.alphabet();
        if x.alphabet() != n {
            return Err(Error::validation(format!(
                "alphabet mismatch: {} vs {n}",
                x.alphabet()
            )));
        }
        if !x.is_balanced() {
            return Err(Error::Domain("α_u acts on balanced elements only".into()));
        }
        self.seq.require_depth(x.level())?;
        let us: Vec<WordPolynomial> = self
            .seq
            .factors(x.level())?
            .iter()
            .map(|u| WordPolynomial::from_matrix(n, 1, u.matrix()))
            .collect::<Result<_>>()?;
        let mut cache: HashMap<Multiindex, WordPolynomial> = HashMap::new();
        let mut isometry = |alpha: &Multiindex| -> Result<WordPolynomial> {
            if let Some(p) = cache.get(alpha) {
                return Ok(p.clone());
            }
            let mut acc = WordPolynomial::one(n);
            for (j, &l) in alpha.letters().iter().enumerate() {
                acc = acc
                    .multiply(&us[j])?
                    .multiply(&WordPolynomial::generator(n, l))?;
            }
            cache.insert(alpha.clone(), acc.clone());
            Ok(acc)
        };
        let mut out = WordPolynomial::zero(n);
        for t in x.terms() {
            let a = isometry(&t.alpha)?;
            let b = isometry(&t.beta)?;
            out = out.add(&a.multiply(&b.adjoint())?.scale(t.coeff))?;
        }
        Ok(out)
    }

    pub fn compose(&self, other: &Self) -> Result<Self> {
        Ok(Self::new(self.seq.compose(&other.seq)?))
    }

    pub fn inverse(&self) -> Self {
        Self::new(self.seq.inverse())
    }
}
