//! Extension of product-type automorphisms `α_u` of the UHF core to
//! endomorphisms `λ_v` of the Cuntz algebra.
//!
//! `α_u` extends iff the telescoped product `u_1 ⊗ u_2u_1* ⊗ u_3u_2* ⊗ …`
//! converges after suitable phase corrections, and then `v` is its limit.

mod peel;
mod verify;

pub use peel::{peel_residuals, PeelingTrace};
pub use verify::{
    verify_against_inner, verify_extension, verify_extension_factors, LevelDeviation,
    VerificationReport,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    cis, is_scalar_multiple_of_identity, phase_align_to_identity, rotate_to_contain_one,
    tensor_all, ComplexMatrix, PhaseAlignment, UnitaryMatrix, C64, ONE,
};
use crate::sequence::{TailRule, UnitarySequence};
use crate::tolerance::{Tolerances, DEFAULT_MAX_DIM, VALIDATION_TOL};
use crate::words::WordPolynomial;

/// `d_k = u_{k+1} u_k*` with its minimal-arc alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct TelescopeFactor {
    pub k: usize,
    pub d: UnitaryMatrix,
    pub alignment: PhaseAlignment,
    /// Phase `φ` with `d ≈ e^{iφ} I`, when `d` is scalar within tolerance.
    pub scalar_phase: Option<f64>,
}

impl TelescopeFactor {
    fn new(k: usize, d: UnitaryMatrix, tol: f64) -> Result<Self> {
        let exact_identity = *d.matrix() == ComplexMatrix::identity(d.dim());
        let alignment = if exact_identity {
            PhaseAlignment { psi: 0.0, delta: 0.0 }
        } else {
            phase_align_to_identity(&d)?
        };
        let scalar_phase = is_scalar_multiple_of_identity(d.matrix(), tol);
        Ok(TelescopeFactor {
            k,
            d,
            alignment,
            scalar_phase,
        })
    }

    pub fn delta(&self) -> f64 {
        self.alignment.delta
    }

    pub fn is_scalar(&self) -> bool {
        self.scalar_phase.is_some()
    }

    /// The factor after gauge correction; scalar factors become exactly `I`.
    pub fn gauged(&self, gauge: Gauge) -> UnitaryMatrix {
        if self.is_scalar() {
            return UnitaryMatrix::identity(self.d.dim());
        }
        match gauge {
            Gauge::MinimalArc => self.d.phase_shift(self.alignment.psi),
            Gauge::PositiveTrace => {
                let tr = self.d.matrix().trace();
                let psi = if tr.norm() > VALIDATION_TOL { -tr.arg() } else { 0.0 };
                self.d.phase_shift(psi)
            }
        }
    }
}

/// Per-factor phase convention for the telescoped product.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    /// `e^{iψ}` minimizing `‖e^{iψ} d − I‖`.
    MinimalArc,
    /// `e^{iψ}` making `τ(e^{iψ} d)` real and non-negative.
    PositiveTrace,
}

/// `d_1, …, d_K`. Needs `u_{K+1}`.
pub fn telescope(seq: &UnitarySequence, k_depth: usize, tol: f64) -> Result<Vec<TelescopeFactor>> {
    seq.require_depth(k_depth + 1)?;
    let n = seq.alphabet();
    let boundary = seq.prefix().len();
    let constant_tail = matches!(seq.tail(), TailRule::Constant(_));
    (1..=k_depth)
        .map(|k| {
            let d = if constant_tail && k > boundary {
                UnitaryMatrix::identity(n)
            } else {
                seq.factor_at(k + 1)?.mul(&seq.factor_at(k)?.adjoint())
            };
            TelescopeFactor::new(k, d, tol)
        })
        .collect()
}

/// `v = g_1 ⊗ g_2 ⊗ …` kept as its list of `n × n` tensor factors.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtensionUnitary {
    n: usize,
    factors: Vec<UnitaryMatrix>,
}

impl ExtensionUnitary {
    pub fn new(n: usize, factors: Vec<UnitaryMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::validation("an extension unitary needs at least one factor"));
        }
        if let Some(f) = factors.iter().find(|f| f.dim() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: f.dim(),
            });
        }
        Ok(ExtensionUnitary { n, factors })
    }

    pub fn alphabet(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[UnitaryMatrix] {
        &self.factors
    }

    /// Drops trailing factors equal to `I`, keeping at least one.
    pub fn trimmed(&self) -> Self {
        let id = UnitaryMatrix::identity(self.n);
        let mut factors = self.factors.clone();
        while factors.len() > 1 && factors.last() == Some(&id) {
            factors.pop();
        }
        ExtensionUnitary { n: self.n, factors }
    }

    /// Appends identity factors up to `level`.
    pub fn padded(&self, level: usize) -> Self {
        let mut factors = self.factors.clone();
        while factors.len() < level {
            factors.push(UnitaryMatrix::identity(self.n));
        }
        ExtensionUnitary { n: self.n, factors }
    }

    pub fn scaled(&self, z: C64) -> Self {
        let mut factors = self.factors.clone();
        factors[0] = factors[0].phase_shift(z.arg());
        ExtensionUnitary { n: self.n, factors }
    }

    pub fn to_matrix(&self) -> Result<ComplexMatrix> {
        let dim = self.n.pow(self.level() as u32);
        if dim > DEFAULT_MAX_DIM {
            return Err(Error::Capacity {
                dim,
                max: DEFAULT_MAX_DIM,
            });
        }
        tensor_all(self.factors.iter().map(UnitaryMatrix::matrix))
    }

    pub fn to_word(&self) -> Result<WordPolynomial> {
        WordPolynomial::from_matrix(self.n, self.level(), &self.to_matrix()?)
    }
}

/// Behaviour of the sampled window of a defect trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    /// Every window entry is below tolerance.
    Vanishing,
    /// Geometric decay with the given worst ratio.
    Summable { ratio: f64 },
    /// Every window entry stays above the divergence floor.
    Divergent,
    Undetermined,
}

/// Ratio test on the last half of `trace`.
pub fn window_trend(trace: &[f64], tol: &Tolerances) -> Result<Trend> {
    if trace.is_empty() {
        return Err(Error::validation("empty sample window"));
    }
    let window = &trace[trace.len() / 2..];
    if window.iter().all(|&x| x <= tol.validation) {
        return Ok(Trend::Vanishing);
    }
    if window.len() >= 2 {
        let mut worst: f64 = 0.0;
        for pair in window.windows(2) {
            let ratio = match (pair[0] <= tol.validation, pair[1] <= tol.validation) {
                (_, true) => 0.0,
                (true, false) => f64::INFINITY,
                (false, false) => pair[1] / pair[0],
            };
            worst = worst.max(ratio);
        }
        if worst <= tol.ratio_threshold {
            return Ok(Trend::Summable { ratio: worst });
        }
    }
    if window.iter().all(|&x| x >= tol.divergence_floor) {
        Ok(Trend::Divergent)
    } else {
        Ok(Trend::Undetermined)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExtensionVerdict {
    /// Exact tail whose telescope factors are eventually scalar.
    ExtensibleExact {
        v: ExtensionUnitary,
        level: usize,
        localized: bool,
    },
    /// Sampled tail with a summable defect trace; `v` is the truncation
    /// `u_1 ⊗ d'_1 ⊗ … ⊗ d'_K`. Not a certificate.
    ExtensibleNumeric {
        v: ExtensionUnitary,
        k: usize,
        tail_bound: f64,
        delta_trace: Vec<f64>,
    },
    /// A non-scalar telescope factor recurs forever.
    NotExtensible {
        witness: TelescopeFactor,
        lower_bound: f64,
    },
    Inconclusive {
        delta_trace: Vec<f64>,
        partial_sums: Vec<f64>,
        trend: Trend,
    },
}

impl ExtensionVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            ExtensionVerdict::ExtensibleExact { .. } => "extensible_exact",
            ExtensionVerdict::ExtensibleNumeric { .. } => "extensible_numeric",
            ExtensionVerdict::NotExtensible { .. } => "not_extensible",
            ExtensionVerdict::Inconclusive { .. } => "inconclusive",
        }
    }

    pub fn is_certified(&self) -> bool {
        matches!(
            self,
            ExtensionVerdict::ExtensibleExact { .. } | ExtensionVerdict::NotExtensible { .. }
        )
    }

    pub fn unitary(&self) -> Option<&ExtensionUnitary> {
        match self {
            ExtensionVerdict::ExtensibleExact { v, .. }
            | ExtensionVerdict::ExtensibleNumeric { v, .. } => Some(v),
            _ => None,
        }
    }
}

fn product_of_factors(
    seq: &UnitarySequence,
    factors: &[TelescopeFactor],
    upto: usize,
    gauge: Gauge,
) -> Result<ExtensionUnitary> {
    let mut slots = vec![seq.factor_at(1)?.clone()];
    slots.extend(factors[..upto].iter().map(|f| f.gauged(gauge)));
    ExtensionUnitary::new(seq.alphabet(), slots)
}

/// Number of telescope factors that an exact tail can make non-trivial,
/// plus one full cycle of the tail.
fn exact_horizon(seq: &UnitarySequence) -> usize {
    seq.prefix().len() + seq.tail().period().unwrap_or(0)
}

/// Decides whether `α_u` extends.
pub fn analyze_extension(
    seq: &UnitarySequence,
    k_depth: usize,
    tol: &Tolerances,
) -> Result<ExtensionVerdict> {
    match seq.tail() {
        TailRule::Constant(_) | TailRule::Periodic(_) => {
            let m = seq.prefix().len();
            let factors = telescope(seq, exact_horizon(seq), tol.validation)?;
            // d_k for k > m lies inside the tail and recurs forever.
            if let Some(w) = factors[m..].iter().find(|f| !f.is_scalar()) {
                return Ok(ExtensionVerdict::NotExtensible {
                    witness: w.clone(),
                    lower_bound: w.delta(),
                });
            }
            let v = product_of_factors(seq, &factors, m, Gauge::MinimalArc)?.trimmed();
            Ok(ExtensionVerdict::ExtensibleExact {
                level: v.level(),
                v,
                localized: true,
            })
        }
        TailRule::Sampled(_) => {
            if k_depth == 0 {
                return Err(Error::validation("empty sample window"));
            }
            let factors = telescope(seq, k_depth, tol.validation)?;
            let delta_trace: Vec<f64> = factors.iter().map(TelescopeFactor::delta).collect();
            let last = *delta_trace.last().unwrap();
            let tail_bound = match window_trend(&delta_trace, tol)? {
                Trend::Vanishing => Some(0.0),
                Trend::Summable { ratio } => Some(last * ratio / (1.0 - ratio)),
                _ => None,
            };
            match tail_bound {
                Some(tail_bound) => Ok(ExtensionVerdict::ExtensibleNumeric {
                    v: product_of_factors(seq, &factors, k_depth, Gauge::MinimalArc)?,
                    k: k_depth,
                    tail_bound,
                    delta_trace,
                }),
                None => {
                    let trend = window_trend(&delta_trace, tol)?;
                    let partial_sums = delta_trace
                        .iter()
                        .scan(0.0, |acc, &d| {
                            *acc += d;
                            Some(*acc)
                        })
                        .collect();
                    Ok(ExtensionVerdict::Inconclusive {
                        delta_trace,
                        partial_sums,
                        trend,
                    })
                }
            }
        }
    }
}

/// `v_K = u_1 ⊗ d'_1 ⊗ … ⊗ d'_K` (level `K + 1`) under the given gauge.
pub fn build_extension_unitary_with_gauge(
    seq: &UnitarySequence,
    k_depth: usize,
    tol: &Tolerances,
    gauge: Gauge,
) -> Result<ExtensionUnitary> {
    let verdict = analyze_extension(seq, k_depth, tol)?;
    if let ExtensionVerdict::NotExtensible { witness, .. } = verdict {
        return Err(Error::Contract(format!(
            "no extension unitary: telescope factor d_{} recurs with δ = {:.6}",
            witness.k,
            witness.delta()
        )));
    }
    let factors = telescope(seq, k_depth, tol.validation)?;
    product_of_factors(seq, &factors, k_depth, gauge)
}

pub fn build_extension_unitary(
    seq: &UnitarySequence,
    k_depth: usize,
    tol: &Tolerances,
) -> Result<ExtensionUnitary> {
    build_extension_unitary_with_gauge(seq, k_depth, tol, Gauge::MinimalArc)
}

/// `‖d'_k − I‖` for `k = 1..K`, computed as operator norms (so they can be
/// compared against the eigenphase-based `δ_k`).
pub fn cauchy_defects(seq: &UnitarySequence, k_depth: usize, tol: f64) -> Result<Vec<f64>> {
    let id = ComplexMatrix::identity(seq.alphabet());
    telescope(seq, k_depth, tol)?
        .iter()
        .map(|f| f.gauged(Gauge::MinimalArc).matrix().distance(&id))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Localization {
    pub localized: bool,
    /// Index beyond which the tail rule forces scalar telescope factors.
    pub stabilization_index: Option<usize>,
    /// Last index with a non-scalar telescope factor (0 if none).
    pub minimal_index: Option<usize>,
    pub certified: bool,
}

/// Whether every extension is localized, i.e. `v` lies in a finite level.
pub fn classify_localized(
    seq: &UnitarySequence,
    verdict: &ExtensionVerdict,
    tol: &Tolerances,
) -> Result<Localization> {
    match verdict {
        ExtensionVerdict::ExtensibleExact { level, .. } => Ok(Localization {
            localized: true,
            stabilization_index: Some(seq.prefix().len()),
            minimal_index: Some(level - 1),
            certified: true,
        }),
        ExtensionVerdict::ExtensibleNumeric { k, .. } => {
            let factors = telescope(seq, *k, tol.validation)?;
            let window = &factors[factors.len() / 2..];
            let localized = window.iter().all(TelescopeFactor::is_scalar);
            let last_nonscalar = factors
                .iter()
                .rposition(|f| !f.is_scalar())
                .map_or(0, |i| i + 1);
            Ok(Localization {
                localized,
                stabilization_index: localized.then_some(last_nonscalar),
                minimal_index: localized.then_some(last_nonscalar),
                certified: false,
            })
        }
        other => Err(Error::Contract(format!(
            "localization needs an extensible verdict, got {}",
            other.kind()
        ))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Leaning {
    Inner,
    Outer,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InnernessVerdict {
    /// `α_u = Ad(u'_1 ⊗ … ⊗ u'_K)` with the rotated factors listed.
    Inner { factors: Vec<UnitaryMatrix>, k: usize },
    /// A rotated factor different from `I` recurs forever.
    Outer {
        index: usize,
        witness: UnitaryMatrix,
        defect: f64,
    },
    Inconclusive {
        leaning: Option<Leaning>,
        defect_trace: Vec<f64>,
    },
}

impl InnernessVerdict {
    pub fn kind(&self) -> &'static str {
        match self {
            InnernessVerdict::Inner { .. } => "inner",
            InnernessVerdict::Outer { .. } => "outer",
            InnernessVerdict::Inconclusive { .. } => "inconclusive",
        }
    }
}

/// Innerness of `α_u` on the UHF core, after rotating every factor so that
/// 1 lies in its spectrum.
pub fn analyze_innerness(
    seq: &UnitarySequence,
    k_depth: usize,
    tol: &Tolerances,
) -> Result<InnernessVerdict> {
    let n = seq.alphabet();
    let id = ComplexMatrix::identity(n);
    let rotated = seq.try_map(rotate_to_contain_one)?;
    let defect = |u: &UnitaryMatrix| u.matrix().distance(&id);
    match rotated.tail() {
        TailRule::Constant(_) | TailRule::Periodic(_) => {
            let m = rotated.prefix().len();
            let p = rotated.tail().period().unwrap();
            for k in m + 1..=m + p {
                let u = rotated.factor_at(k)?;
                let d = defect(u)?;
                if d > tol.validation {
                    return Ok(InnernessVerdict::Outer {
                        index: k,
                        witness: u.clone(),
                        defect: d,
                    });
                }
            }
            let k = m.max(1);
            Ok(InnernessVerdict::Inner {
                factors: rotated.factors(k)?,
                k,
            })
        }
        TailRule::Sampled(_) => {
            rotated.require_depth(k_depth)?;
            let defect_trace = (1..=k_depth)
                .map(|k| defect(rotated.factor_at(k)?))
                .collect::<Result<Vec<f64>>>()?;
            let leaning = match window_trend(&defect_trace, tol)? {
                Trend::Vanishing | Trend::Summable { .. } => Some(Leaning::Inner),
                Trend::Divergent => Some(Leaning::Outer),
                Trend::Undetermined => None,
            };
            Ok(InnernessVerdict::Inconclusive {
                leaning,
                defect_trace,
            })
        }
    }
}

/// `u φ(u*)`, whose endomorphism restricts to `Ad(u)` on the UHF core.
pub fn inner_extension_unitary(u: &WordPolynomial) -> Result<WordPolynomial> {
    let defect = u
        .unitarity_defect()
        .map_err(|e| Error::validation(format!("inner extension needs a finite-level unitary: {e}")))?;
    if defect > VALIDATION_TOL {
        return Err(Error::validation(format!(
            "u is not unitary: defect {defect:e}"
        )));
    }
    u.multiply(&u.adjoint().phi())
}

/// `z · v` for a unit-modulus `z`; `λ_{zv}` and `λ_v` agree on the core.
pub fn gauge_compose(v: &WordPolynomial, z: C64) -> Result<WordPolynomial> {
    if (z.norm() - 1.0).abs() > VALIDATION_TOL {
        return Err(Error::validation(format!(
            "gauge factor {z} is not of modulus one"
        )));
    }
    Ok(v.scale(z))
}

/// Phase `θ` with `v' = e^{iθ} v` within `tol`, if any.
pub fn gauge_difference(v1: &ComplexMatrix, v2: &ComplexMatrix, tol: f64) -> Option<f64> {
    if v1.dim() != v2.dim() {
        return None;
    }
    is_scalar_multiple_of_identity(&v1.mul(&v2.adjoint()), tol)
}

/// The gauge unitary `z·1` as a level-1 polynomial.
pub fn gauge_unitary(n: usize, theta: f64) -> WordPolynomial {
    WordPolynomial::scalar(n, cis(theta) * ONE)
}
