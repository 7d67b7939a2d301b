//! Peeling a level-`L` unitary `w` against the telescoped factors:
//! `w = (u_1 ⊗ d'_1 ⊗ … ⊗ d'_k) · (1_{n^{k+1}} ⊗ z_{k+1})`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{tensor_all, unitarity_defect, ComplexMatrix, UnitaryMatrix, C64};
use crate::sequence::UnitarySequence;

use super::{telescope, Gauge};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeelingTrace {
    pub k: usize,
    /// `z_{k+1}` after the phase fix.
    pub z: ComplexMatrix,
    /// `τ(z_{k+1})` after the phase fix (real, non-negative).
    pub tau_z: C64,
    pub phase_fix: f64,
    /// Largest entry of `E_{k+1}(w) − P_k τ(z_{k+1})` before the phase fix.
    pub identity_residual: f64,
}

pub fn peel_residuals(
    w: &ComplexMatrix,
    seq: &UnitarySequence,
    k_max: usize,
    tol: f64,
) -> Result<Vec<PeelingTrace>> {
    let n = seq.alphabet();
    let mut level = 0;
    while n.pow(level as u32) < w.dim() {
        level += 1;
    }
    if n.pow(level as u32) != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: n.pow(level as u32),
            found: w.dim(),
        });
    }
    if k_max >= level {
        return Err(Error::precondition(format!(
            "peeling depth {k_max} must be below the level {level} of w"
        )));
    }
    let defect = unitarity_defect(w)?;
    if defect > tol {
        return Err(Error::precondition(format!("w is not unitary: defect {defect:e}")));
    }
    let factors = telescope(seq, k_max, tol)?;
    let mut slots: Vec<UnitaryMatrix> = vec![seq.factor_at(1)?.clone()];
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        if k > 0 {
            slots.push(factors[k - 1].gauged(Gauge::MinimalArc));
        }
        let p = tensor_all(slots.iter().map(UnitaryMatrix::matrix))?;
        let bd = n.pow((level - k - 1) as u32);
        let nb = p.dim();
        let q = p.adjoint().tensor(&ComplexMatrix::identity(bd))?.mul(w);

        let mut z = ComplexMatrix::zeros(bd);
        for b in 0..nb {
            z = z.add(&q.block(b, b, bd));
        }
        z = z.scale(C64::new(1.0 / nb as f64, 0.0));
        let mut disagreement: f64 = 0.0;
        for r in 0..nb {
            for c in 0..nb {
                let blk = q.block(r, c, bd);
                let off = if r == c { blk.sub(&z) } else { blk };
                disagreement = disagreement.max(off.max_abs_entry());
            }
        }
        if disagreement > tol {
            return Err(Error::Structural {
                level: k + 1,
                detail: format!("residual blocks disagree by {disagreement:e}"),
            });
        }
        let zdefect = unitarity_defect(&z)?;
        if zdefect > tol {
            return Err(Error::Structural {
                level: k + 1,
                detail: format!("residual is not unitary: defect {zdefect:e}"),
            });
        }

        let tau = z.trace() / bd as f64;
        let expect = p.scale(tau);
        let identity_residual = w.partial_trace_tail(nb)?.sub(&expect).max_abs_entry();
        let phase_fix = if tau.norm() > tol { -tau.arg() } else { 0.0 };
        let fix = C64::from_polar(1.0, phase_fix);
        out.push(PeelingTrace {
            k,
            z: z.scale(fix),
            tau_z: C64::new(tau.norm(), 0.0),
            phase_fix,
            identity_residual,
        });
    }
    Ok(out)
}
