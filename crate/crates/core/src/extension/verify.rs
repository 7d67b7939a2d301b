//! Comparison of `λ_v` with a target automorphism on all matrix units.
//!
//! With `λ_v(E_{αβ}) = V_k (E_{αβ} ⊗ 1) V_k*` and a target of the form
//! `Y (E_{αβ} ⊗ 1) Y*`, the difference is `L_α L_β* − M_α M_β*` where
//! `L_α`, `M_α` are the `α` column blocks of `V_k` and `Y`. Its norm is
//! `‖A_α B_β*‖` with `A_α = [L_α, M_α]` and `B_β = [L_β, −M_β]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    hermitian_extremes, spectral_norm_small, tensor_all, triangular_factor, ComplexMatrix,
    UnitaryMatrix, C64,
};
use crate::product::ProductAutomorphism;
use crate::words::{Multiindex, WordPolynomial};

use super::ExtensionUnitary;

/// Largest dense dimension used by the matrix-based verifier.
const DENSE_VERIFY_MAX: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelDeviation {
    pub level: usize,
    pub max_deviation: f64,
    /// 1-based words of the worst matrix unit.
    pub worst_alpha: Vec<usize>,
    pub worst_beta: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub k_max: usize,
    pub tol: f64,
    pub levels: Vec<LevelDeviation>,
    pub max_deviation: f64,
    pub passed: bool,
}

impl VerificationReport {
    fn from_levels(levels: Vec<LevelDeviation>, k_max: usize, tol: f64) -> Self {
        let max_deviation = levels.iter().map(|l| l.max_deviation).fold(0.0, f64::max);
        VerificationReport {
            k_max,
            tol,
            levels,
            max_deviation,
            passed: max_deviation <= tol,
        }
    }
}

fn columns(m: &ComplexMatrix, start: usize, width: usize, sign: f64) -> DMatrix<C64> {
    DMatrix::from_fn(m.dim(), width, |r, c| m[(r, start + c)] * sign)
}

fn stacked(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Worst `‖L_α L_β* − M_α M_β*‖` over all pairs, where blocks are taken as
/// `width` consecutive columns; `scales` lists factors applied to `L_α`
/// (the maximum over them is reported).
fn worst_pair(
    l: &ComplexMatrix,
    m: &ComplexMatrix,
    n: usize,
    k: usize,
    width: usize,
    scales: &[f64],
) -> LevelDeviation {
    let count = n.pow(k as u32);
    let block = |mat: &ComplexMatrix, a: usize, sign: f64| columns(mat, a * width, width, sign);
    let left: Vec<Vec<DMatrix<C64>>> = scales
        .iter()
        .map(|&s| {
            (0..count)
                .map(|a| triangular_factor(stacked(&block(l, a, s), &block(m, a, 1.0))))
                .collect()
        })
        .collect();
    let right: Vec<DMatrix<C64>> = (0..count)
        .map(|b| triangular_factor(stacked(&block(l, b, 1.0), &block(m, b, -1.0))))
        .collect();
    // Identical blocks give an exactly vanishing difference.
    let same: Vec<bool> = (0..count)
        .map(|a| block(l, a, 1.0) == block(m, a, 1.0))
        .collect();
    let mut worst = (0.0, 0, 0);
    for (ra, &s) in left.iter().zip(scales) {
        for (a, ra) in ra.iter().enumerate() {
            for (b, rb) in right.iter().enumerate() {
                if s == 1.0 && same[a] && same[b] {
                    continue;
                }
                let d = spectral_norm_small(&(ra * rb.adjoint()));
                if d > worst.0 {
                    worst = (d, a, b);
                }
            }
        }
    }
    LevelDeviation {
        level: k,
        max_deviation: worst.0,
        worst_alpha: Multiindex::from_index(worst.1, k, n).one_based(),
        worst_beta: Multiindex::from_index(worst.2, k, n).one_based(),
    }
}

fn pad(m: &ComplexMatrix, n: usize, extra: usize) -> Result<ComplexMatrix> {
    if extra == 0 {
        Ok(m.clone())
    } else {
        m.tensor(&ComplexMatrix::identity(n.pow(extra as u32)))
    }
}

/// Dense route: `v` at level `lv`, target unitary `Y_k` at level `m_k`.
fn verify_dense(
    v: &ComplexMatrix,
    lv: usize,
    n: usize,
    mut target: impl FnMut(usize) -> Result<(ComplexMatrix, usize)>,
    k_max: usize,
    tol: f64,
) -> Result<VerificationReport> {
    let mut levels = Vec::new();
    let mut vk = v.clone();
    for k in 1..=k_max {
        if k > 1 {
            // V_k = (v ⊗ 1)(1 ⊗ V_{k−1}), both at level lv + k − 1.
            let left = pad(v, n, k - 1)?;
            let right = ComplexMatrix::identity(n).tensor(&vk)?;
            vk = left.mul(&right);
        }
        let (y, my) = target(k)?;
        let lvk = lv + k - 1;
        let common = lvk.max(my).max(k);
        let dim = n.pow(common as u32);
        if dim > DENSE_VERIFY_MAX {
            return Err(Error::Capacity {
                dim,
                max: DENSE_VERIFY_MAX,
            });
        }
        let l = pad(&vk, n, common - lvk)?;
        let m = pad(&y, n, common - my)?;
        let width = n.pow((common - k) as u32);
        levels.push(worst_pair(&l, &m, n, k, width, &[1.0]));
    }
    Ok(VerificationReport::from_levels(levels, k_max, tol))
}

fn dense_word(v: &WordPolynomial) -> Result<(ComplexMatrix, usize)> {
    let lv = v.level().max(1);
    Ok((v.to_matrix(lv)?, lv))
}

/// Compares `λ_v` with `α_u` on all matrix units up to level `k_max`.
pub fn verify_extension(
    v: &WordPolynomial,
    a: &ProductAutomorphism,
    k_max: usize,
    tol: f64,
) -> Result<VerificationReport> {
    let (vm, lv) = dense_word(v)?;
    verify_dense(&vm, lv, a.alphabet(), |k| Ok((a.level_unitary(k)?, k)), k_max, tol)
}

/// Compares `λ_v` with `Ad(u)` on all matrix units up to level `k_max`.
pub fn verify_against_inner(
    v: &WordPolynomial,
    u: &WordPolynomial,
    k_max: usize,
    tol: f64,
) -> Result<VerificationReport> {
    let (vm, lv) = dense_word(v)?;
    let (um, lu) = dense_word(u)?;
    verify_dense(&vm, lv, v.alphabet(), |_| Ok((um.clone(), lu)), k_max, tol)
}

/// Product-tensor route. For `v = g_1 ⊗ … ⊗ g_L`, slot `j` of `V_k` is
/// `g_j g_{j−1} ⋯ g_{j−k+1}`, so `V_k = A ⊗ T` with `A` on the first `k`
/// slots, and `λ_v(E) − α_u(E) = A E A* ⊗ T T* − Y E Y* ⊗ 1`. Its norm is
/// the larger of `‖b A E A* − Y E Y*‖` over the extreme eigenvalues `b` of
/// `T T*`.
pub fn verify_extension_factors(
    v: &ExtensionUnitary,
    a: &ProductAutomorphism,
    k_max: usize,
    tol: f64,
) -> Result<VerificationReport> {
    let n = v.alphabet();
    if a.alphabet() != n {
        return Err(Error::validation(format!(
            "alphabet mismatch: {} vs {}",
            n,
            a.alphabet()
        )));
    }
    let lv = v.level();
    let id = UnitaryMatrix::identity(n);
    let g = |i: usize| -> &UnitaryMatrix {
        if (1..=lv).contains(&i) {
            &v.factors()[i - 1]
        } else {
            &id
        }
    };
    let mut levels = Vec::new();
    for k in 1..=k_max {
        let slot = |j: usize| -> UnitaryMatrix {
            (0..k)
                .filter(|&t| t < j)
                .fold(UnitaryMatrix::identity(n), |acc, t| acc.mul(g(j - t)))
        };
        let head: Vec<UnitaryMatrix> = (1..=k).map(slot).collect();
        let amat = tensor_all(head.iter().map(UnitaryMatrix::matrix))?;
        let (mut lo, mut hi) = (1.0, 1.0);
        for j in k + 1..lv + k {
            let t = slot(j);
            let (l, h) = hermitian_extremes(&t.matrix().mul(&t.matrix().adjoint()));
            lo *= l;
            hi *= h;
        }
        let y = a.level_unitary(k)?;
        levels.push(worst_pair(&amat, &y, n, k, 1, &[lo, hi]));
    }
    Ok(VerificationReport::from_levels(levels, k_max, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::UnitarySequence;

    #[test]
    fn identity_against_identity() {
        let a = ProductAutomorphism::new(
            UnitarySequence::constant(2, UnitaryMatrix::identity(2)).unwrap(),
        );
        let r = verify_extension(&WordPolynomial::one(2), &a, 3, 1e-10).unwrap();
        assert_eq!(r.max_deviation, 0.0);
        assert!(r.passed);
    }

    #[test]
    fn bogolubov_both_routes() {
        let x = UnitaryMatrix::pauli_x();
        let a = ProductAutomorphism::new(UnitarySequence::constant(2, x.clone()).unwrap());
        let v = ExtensionUnitary::new(2, vec![x.clone()]).unwrap();
        let r1 = verify_extension_factors(&v, &a, 3, 1e-12).unwrap();
        let r2 = verify_extension(&v.to_word().unwrap(), &a, 3, 1e-12).unwrap();
        assert!(r1.passed && r2.passed);
    }

    #[test]
    fn wrong_unitary_fails_with_unit_deviation() {
        let a = ProductAutomorphism::new(
            UnitarySequence::constant(2, UnitaryMatrix::pauli_x()).unwrap(),
        );
        let v = ExtensionUnitary::new(2, vec![UnitaryMatrix::identity(2)]).unwrap();
        let r = verify_extension_factors(&v, &a, 2, 1e-10).unwrap();
        assert!(!r.passed);
        // λ_1(E_11) = E_11 versus E_22: the difference has norm 1.
        assert!((r.levels[0].max_deviation - 1.0).abs() < 1e-12);
        let dense = verify_extension(&WordPolynomial::one(2), &a, 2, 1e-10).unwrap();
        assert!((dense.max_deviation - r.max_deviation).abs() < 1e-12);
    }
}
