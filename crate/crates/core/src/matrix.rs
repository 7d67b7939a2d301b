//! Dense complex matrices of the finite levels `M_n ⊗ … ⊗ M_n`.
//!
//! Everything here is sized for the desk-scale analysis done by the rest of
//! the crate: square matrices, row-major storage, a hard dimension cap on
//! tensor products, and an operator norm computed by power iteration on
//! `A*A` from a seeded start vector.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tolerance::{DEFAULT_MAX_DIM, SOLVER_TOL, VALIDATION_TOL};

pub type C64 = Complex64;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// `e^{iθ}`.
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

/// Maps an angle into `(−π, π]`.
pub fn wrap_phase(theta: f64) -> f64 {
    let mut t = theta % (2.0 * PI);
    if t <= -PI {
        t += 2.0 * PI;
    } else if t > PI {
        t -= 2.0 * PI;
    }
    t
}

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{})", self.dim, self.dim)?;
        for r in 0..self.dim {
            write!(f, "  [")?;
            for c in 0..self.dim {
                let z = self[(r, c)];
                write!(f, " {:+.4}{:+.4}i", z.re, z.im)?;
            }
            writeln!(f, " ]")?;
        }
        Ok(())
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.dim + c]
    }
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be positive");
        ComplexMatrix {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &z) in entries.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// Builds a matrix from rows; every row must have as many entries as
    /// there are rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::validation("matrix must have at least one row"));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::validation(format!(
                    "row {i} has {} entries, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(ComplexMatrix { dim, data })
    }

    /// Row-major constructor from real parts only.
    pub fn from_real(dim: usize, entries: &[f64]) -> Self {
        assert_eq!(entries.len(), dim * dim);
        ComplexMatrix {
            dim,
            data: entries.iter().map(|&x| C64::new(x, 0.0)).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, z: C64) -> Self {
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().map(|&x| x * z).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        let d = self.dim;
        let mut out = vec![ZERO; d * d];
        for r in 0..d {
            let row = &self.data[r * d..(r + 1) * d];
            let out_row = &mut out[r * d..(r + 1) * d];
            for (k, &a) in row.iter().enumerate() {
                if a == ZERO {
                    continue;
                }
                let other_row = &other.data[k * d..(k + 1) * d];
                for (o, &b) in out_row.iter_mut().zip(other_row) {
                    *o += a * b;
                }
            }
        }
        ComplexMatrix { dim: d, data: out }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let d = self.dim;
        (0..d)
            .map(|r| {
                self.data[r * d..(r + 1) * d]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    /// `A* x` without forming the adjoint.
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![ZERO; d];
        for (r, &xr) in x.iter().enumerate() {
            if xr == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(&self.data[r * d..(r + 1) * d]) {
                *o += a.conj() * xr;
            }
        }
        out
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Kronecker product `self ⊗ other`, capped at [`DEFAULT_MAX_DIM`].
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        self.tensor_capped(other, DEFAULT_MAX_DIM)
    }

    pub fn tensor_capped(&self, other: &Self, max_dim: usize) -> Result<Self> {
        let dim = self
            .dim
            .checked_mul(other.dim)
            .ok_or(Error::Capacity { dim: usize::MAX, max: max_dim })?;
        if dim > max_dim {
            return Err(Error::Capacity { dim, max: max_dim });
        }
        let (da, db) = (self.dim, other.dim);
        let mut out = Self::zeros(dim);
        for ar in 0..da {
            for ac in 0..da {
                let a = self[(ar, ac)];
                if a == ZERO {
                    continue;
                }
                for br in 0..db {
                    for bc in 0..db {
                        out[(ar * db + br, ac * db + bc)] = a * other[(br, bc)];
                    }
                }
            }
        }
        Ok(out)
    }

    /// `I_left ⊗ self ⊗ I_right`.
    pub fn embed(&self, left: usize, right: usize) -> Result<Self> {
        let dim = left * self.dim * right;
        if dim > DEFAULT_MAX_DIM {
            return Err(Error::Capacity { dim, max: DEFAULT_MAX_DIM });
        }
        let mut out = Self::zeros(dim);
        let inner = self.dim * right;
        for l in 0..left {
            for r in 0..self.dim {
                for c in 0..self.dim {
                    let z = self[(r, c)];
                    if z == ZERO {
                        continue;
                    }
                    for t in 0..right {
                        out[(l * inner + r * right + t, l * inner + c * right + t)] = z;
                    }
                }
            }
        }
        Ok(out)
    }

    /// The `(row_block, col_block)` sub-block when the matrix is viewed as a
    /// grid of `block_dim × block_dim` blocks.
    pub fn block(&self, row_block: usize, col_block: usize, block_dim: usize) -> Self {
        Self::from_fn(block_dim, |r, c| {
            self[(row_block * block_dim + r, col_block * block_dim + c)]
        })
    }

    /// Normalized partial trace over the trailing tensor slots: views the
    /// matrix as `M_keep ⊗ M_rest` (with `rest = dim / keep`) and returns
    /// `(id ⊗ tr/rest)(self)`.
    pub fn partial_trace_tail(&self, keep: usize) -> Result<Self> {
        if keep == 0 || !self.dim.is_multiple_of(keep) {
            return Err(Error::DimensionMismatch {
                expected: keep,
                found: self.dim,
            });
        }
        let rest = self.dim / keep;
        let norm = 1.0 / rest as f64;
        Ok(Self::from_fn(keep, |r, c| {
            let s: C64 = (0..rest).map(|t| self[(r * rest + t, c * rest + t)]).sum();
            s * norm
        }))
    }

    pub fn operator_norm(&self) -> Result<f64> {
        operator_norm_with(self, &NormOptions::default())
    }

    /// `‖self − other‖`, returning 0 without iterating when the entries agree
    /// exactly.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        let diff = self.sub(other);
        diff.operator_norm()
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .data
            .chunks(self.dim)
            .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(d)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Kronecker product of two matrices (see [`ComplexMatrix::tensor`]).
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.tensor(b)
}

/// Kronecker product of a list of matrices, left to right.
pub fn tensor_all<'a, I>(factors: I) -> Result<ComplexMatrix>
where
    I: IntoIterator<Item = &'a ComplexMatrix>,
{
    let mut it = factors.into_iter();
    let first = it
        .next()
        .ok_or_else(|| Error::validation("empty tensor product"))?;
    it.try_fold(first.clone(), |acc, m| acc.tensor(m))
}

/// Knobs for [`operator_norm_with`].
#[derive(Clone, Copy, Debug)]
pub struct NormOptions {
    /// Relative tolerance on the returned norm.
    pub rel_tol: f64,
    /// Absolute floor below which the norm counts as converged; useful when
    /// only the scale relative to a verification tolerance matters.
    pub abs_tol: f64,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            rel_tol: SOLVER_TOL,
            abs_tol: 0.0,
            max_steps: 10_000,
            seed: 0x5eed_c0de,
        }
    }
}

impl NormOptions {
    pub fn with_abs_tol(abs_tol: f64) -> Self {
        NormOptions {
            abs_tol,
            ..Self::default()
        }
    }
}

fn seeded_unit_vector(dim: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (dim as u64).wrapping_mul(0x9e37_79b9));
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    normalize(&mut v);
    v
}

fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [C64]) -> f64 {
    let n = vec_norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|z| *z /= n);
    }
    n
}

fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// Largest eigenvalue of the positive operator `B` applied by `step`
/// (which returns `Bx` and `x*Bx` for unit `x`). Each step is a power step
/// followed by Rayleigh–Ritz on `span{x, Bx}`, so a nearly degenerate top
/// pair does not stall the iteration. Stops when the Ritz value settles.
fn power_iterate_psd(
    dim: usize,
    opts: &NormOptions,
    routine: &'static str,
    mut step: impl FnMut(&[C64]) -> (Vec<C64>, f64),
) -> Result<f64> {
    let mut x = seeded_unit_vector(dim, opts.seed);
    // Rounding noise in the quotient sits near machine epsilon, so the
    // increment threshold cannot be tighter than a few ulps.
    let stop = (opts.rel_tol * 1e-3).max(8.0 * f64::EPSILON);
    let abs_sq = opts.abs_tol * opts.abs_tol;
    let mut prev = f64::NAN;
    for _ in 0..opts.max_steps {
        let (y, rho) = step(&x);
        if rho <= abs_sq {
            return Ok(rho.max(0.0));
        }
        // Residual direction, orthogonal to x.
        let mut w: Vec<C64> = y.iter().zip(&x).map(|(yi, xi)| yi - xi * rho).collect();
        let proj = dot(&x, &w);
        w.iter_mut().zip(&x).for_each(|(wi, xi)| *wi -= xi * proj);
        let beta = normalize(&mut w);
        let theta = if beta <= stop * rho {
            rho
        } else {
            let (_, gamma) = step(&w);
            let half = (rho - gamma) / 2.0;
            let root = half.hypot(beta);
            let theta = (rho + gamma) / 2.0 + root;
            // Top eigenvector of [[rho, beta], [beta, gamma]].
            let (c1, c2) = if half >= 0.0 {
                (half + root, beta)
            } else {
                (beta, root - half)
            };
            let norm = c1.hypot(c2);
            x.iter_mut()
                .zip(&w)
                .for_each(|(xi, wi)| *xi = *xi * (c1 / norm) + wi * (c2 / norm));
            theta
        };
        if beta <= stop * rho || (prev.is_finite() && (theta - prev).abs() <= stop * theta) {
            return Ok(theta.max(0.0));
        }
        prev = theta;
        if normalize(&mut x) == 0.0 {
            return Ok(theta.max(0.0));
        }
    }
    Err(Error::Numeric {
        routine,
        detail: format!(
            "power iteration did not converge in {} steps (last estimate {prev:e}, dim {dim})",
            opts.max_steps
        ),
    })
}

/// Largest singular value of `a` by power iteration on `A*A`.
pub fn operator_norm_with(a: &ComplexMatrix, opts: &NormOptions) -> Result<f64> {
    let scale = a.max_abs_entry();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if scale * (a.dim as f64) <= opts.abs_tol {
        // Frobenius bound already below the floor.
        let fro = a.frobenius_norm();
        if fro <= opts.abs_tol {
            return Ok(fro);
        }
    }
    let inv = 1.0 / scale;
    let scaled = a.scale(C64::new(inv, 0.0));
    let scaled_opts = NormOptions {
        abs_tol: opts.abs_tol * inv,
        ..*opts
    };
    let rho = power_iterate_psd(
        a.dim,
        &scaled_opts,
        "operator_norm",
        |x| {
            let ax = scaled.mul_vec(x);
            let rho = vec_norm(&ax).powi(2);
            (scaled.adjoint_mul_vec(&ax), rho)
        },
    )?;
    Ok(rho.sqrt() * scale)
}

/// Triangular factor `R` of a tall matrix (`A = QR`). Products `R_A R_B*`
/// have the norm of `A B*` without the squaring of a Gram-matrix route, so
/// near-cancelling differences keep absolute accuracy.
pub(crate) fn triangular_factor(a: DMatrix<C64>) -> DMatrix<C64> {
    debug_assert!(a.nrows() >= a.ncols());
    a.qr().r()
}

/// Largest singular value of a small dense matrix.
pub(crate) fn spectral_norm_small(m: &DMatrix<C64>) -> f64 {
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Smallest and largest eigenvalue of a Hermitian matrix.
pub(crate) fn hermitian_extremes(m: &ComplexMatrix) -> (f64, f64) {
    let eig = m.to_nalgebra().symmetric_eigenvalues();
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

/// A matrix certified unitary at construction: `‖U*U − I‖` is recorded and
/// bounded by the tolerance it was validated against.
#[derive(Clone, Debug)]
pub struct UnitaryMatrix {
    base: ComplexMatrix,
    unitarity_defect: f64,
}

impl PartialEq for UnitaryMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.base == other.base
    }
}

impl Serialize for UnitaryMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.base.serialize(s)
    }
}

impl<'de> Deserialize<'de> for UnitaryMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        UnitaryMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// `‖M*M − I‖`, to the precision that matters for validation.
pub fn unitarity_defect(m: &ComplexMatrix) -> Result<f64> {
    let g = m.adjoint().mul(m).sub(&ComplexMatrix::identity(m.dim));
    operator_norm_with(&g, &NormOptions::with_abs_tol(1e-15))
}

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, VALIDATION_TOL)
    }

    pub fn with_tolerance(m: ComplexMatrix, tol: f64) -> Result<Self> {
        let defect = unitarity_defect(&m)?;
        if !(defect <= tol) {
            return Err(Error::validation(format!(
                "matrix is not unitary: ‖U*U − I‖ = {defect:e} exceeds {tol:e}"
            )));
        }
        Ok(UnitaryMatrix {
            base: m,
            unitarity_defect: defect,
        })
    }

    /// Wraps a matrix whose unitarity follows from how it was built (tensor
    /// products and products of validated unitaries, permutation matrices).
    pub(crate) fn trusted(m: ComplexMatrix, defect: f64) -> Self {
        UnitaryMatrix {
            base: m,
            unitarity_defect: defect,
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::trusted(ComplexMatrix::identity(dim), 0.0)
    }

    /// `diag(e^{iθ_1}, …)`.
    pub fn diag_phases(phases: &[f64]) -> Self {
        let entries: Vec<C64> = phases.iter().map(|&t| cis(t)).collect();
        Self::trusted(ComplexMatrix::diag(&entries), 0.0)
    }

    pub fn pauli_x() -> Self {
        Self::trusted(ComplexMatrix::from_real(2, &[0.0, 1.0, 1.0, 0.0]), 0.0)
    }

    pub fn hadamard() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = ComplexMatrix::from_real(2, &[h, h, h, -h]);
        let d = unitarity_defect(&m).unwrap_or(0.0);
        Self::trusted(m, d)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.base
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn unitarity_defect(&self) -> f64 {
        self.unitarity_defect
    }

    pub fn adjoint(&self) -> Self {
        Self::trusted(self.base.adjoint(), self.unitarity_defect)
    }

    /// Product with the defect recomputed.
    pub fn mul(&self, other: &Self) -> Self {
        let m = self.base.mul(&other.base);
        let bound = self.unitarity_defect
            + other.unitarity_defect
            + self.unitarity_defect * other.unitarity_defect;
        let d = if m.dim <= 64 {
            unitarity_defect(&m).unwrap_or(bound)
        } else {
            bound
        };
        Self::trusted(m, d)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        let m = self.base.tensor(&other.base)?;
        // (1+a)(1+b) − 1 bounds the defect of a Kronecker product.
        let bound = self.unitarity_defect
            + other.unitarity_defect
            + self.unitarity_defect * other.unitarity_defect;
        Ok(Self::trusted(m, bound))
    }

    pub fn phase_shift(&self, theta: f64) -> Self {
        Self::trusted(self.base.scale(cis(theta)), self.unitarity_defect)
    }

    fn check_defect(&self) -> Result<()> {
        if self.unitarity_defect <= VALIDATION_TOL {
            Ok(())
        } else {
            Err(Error::precondition(format!(
                "unitarity defect {:e} is above {VALIDATION_TOL:e}",
                self.unitarity_defect
            )))
        }
    }
}

/// The gauge `ψ` that brings a unitary closest to the identity, and the
/// remaining distance `δ = ‖e^{iψ}U − I‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseAlignment {
    pub psi: f64,
    pub delta: f64,
}

/// Eigenvalue arguments of a unitary, sorted ascending in `(−π, π]`.
pub fn eigenphases(u: &UnitaryMatrix) -> Result<Vec<f64>> {
    u.check_defect()?;
    let schur = nalgebra::Schur::try_new(u.base.to_nalgebra(), 1e-15, 100_000).ok_or(
        Error::Numeric {
            routine: "eigenphases",
            detail: "Schur iteration did not converge".into(),
        },
    )?;
    let (_, t) = schur.unpack();
    let eigenvalues: Vec<C64> = (0..u.dim()).map(|i| t[(i, i)]).collect();
    let mut phases: Vec<f64> = eigenvalues
        .iter()
        .map(|z| {
            let p = z.arg();
            if p <= -PI + 1e-12 {
                PI
            } else {
                p
            }
        })
        .collect();
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let residual = spectrum_residual(&u.base, &phases)?;
    let allowed = 1e-7 * 2f64.powi(u.dim() as i32);
    if residual > allowed {
        return Err(Error::Numeric {
            routine: "eigenphases",
            detail: format!("spectrum residual {residual:e} above {allowed:e}"),
        });
    }
    Ok(phases)
}

/// How far the phases are from being the spectrum of `m`: the norm of
/// `Π_j (m − e^{iφ_j})` for small dimensions, and the largest deviation
/// between the characteristic polynomial of `m` (Faddeev–LeVerrier) and
/// `Π_j (x − e^{iφ_j})` otherwise.
pub fn spectrum_residual(m: &ComplexMatrix, phases: &[f64]) -> Result<f64> {
    let d = m.dim;
    if phases.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: phases.len(),
        });
    }
    if d <= 4 {
        let id = ComplexMatrix::identity(d);
        let mut p = id.clone();
        for &ph in phases {
            p = p.mul(&m.sub(&id.scale(cis(ph))));
        }
        return operator_norm_with(&p, &NormOptions::with_abs_tol(1e-14));
    }
    let from_roots = poly_from_roots(&phases.iter().map(|&p| cis(p)).collect::<Vec<_>>());
    let from_matrix = characteristic_polynomial(m);
    Ok(from_roots
        .iter()
        .zip(&from_matrix)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max))
}

/// Coefficients `c_0..c_d` (monic, `c_d = 1`) of `Π (x − r)`.
fn poly_from_roots(roots: &[C64]) -> Vec<C64> {
    let mut coeffs = vec![ONE];
    for &r in roots {
        let mut next = vec![ZERO; coeffs.len() + 1];
        for (i, &c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        coeffs = next;
    }
    coeffs
}

/// Coefficients `c_0..c_d` of `det(xI − m)` by the Faddeev–LeVerrier
/// recursion.
fn characteristic_polynomial(m: &ComplexMatrix) -> Vec<C64> {
    let d = m.dim;
    let mut coeffs = vec![ZERO; d + 1];
    coeffs[d] = ONE;
    let id = ComplexMatrix::identity(d);
    let mut mk = ComplexMatrix::zeros(d);
    for k in 1..=d {
        mk = m.mul(&mk).add(&id.scale(coeffs[d - k + 1]));
        coeffs[d - k] = -m.mul(&mk).trace() / k as f64;
    }
    coeffs
}

/// Minimal enclosing arc of the eigenphases: `ψ = −(arc midpoint)` and
/// `δ = 2 sin(width/4)`.
pub fn phase_align_to_identity(u: &UnitaryMatrix) -> Result<PhaseAlignment> {
    let phases = eigenphases(u)?;
    Ok(align_phases(&phases))
}

pub(crate) fn align_phases(phases: &[f64]) -> PhaseAlignment {
    let m = phases.len();
    // Largest gap between circularly consecutive phases; the minimal arc is
    // its complement.
    let mut best_gap = -1.0;
    let mut best = 0;
    for j in 0..m {
        let gap = if j + 1 < m {
            phases[j + 1] - phases[j]
        } else {
            phases[0] + 2.0 * PI - phases[m - 1]
        };
        if gap > best_gap + 1e-14 {
            best_gap = gap;
            best = j;
        }
    }
    let start = phases[(best + 1) % m];
    let width = (2.0 * PI - best_gap).max(0.0);
    let mid = start + width / 2.0;
    PhaseAlignment {
        psi: wrap_phase(-mid),
        delta: 2.0 * (width / 4.0).sin(),
    }
}

/// Returns `φ` with `‖u − e^{iφ}I‖ ≤ tol`, `φ` read off `u[0,0]`.
pub fn is_scalar_multiple_of_identity(u: &ComplexMatrix, tol: f64) -> Option<f64> {
    let phi = u[(0, 0)].arg();
    let diff = u.sub(&ComplexMatrix::identity(u.dim).scale(cis(phi)));
    // The max entry bounds the norm from below and the Frobenius norm from
    // above; only iterate when they straddle the tolerance.
    if diff.max_abs_entry() > tol {
        return None;
    }
    if diff.frobenius_norm() <= tol {
        return Some(phi);
    }
    match operator_norm_with(&diff, &NormOptions::with_abs_tol(tol * 1e-3)) {
        Ok(d) if d <= tol => Some(phi),
        _ => None,
    }
}

/// `e^{−iφ*}u` where `φ*` is the eigenphase of smallest modulus (ties go to
/// the positive phase), so that 1 lies in the spectrum of the result.
pub fn rotate_to_contain_one(u: &UnitaryMatrix) -> Result<UnitaryMatrix> {
    let phases = eigenphases(u)?;
    let mut star = phases[0];
    for &p in &phases[1..] {
        let (a, b) = (p.abs(), star.abs());
        if a < b - 1e-12 || ((a - b).abs() <= 1e-12 && p > star) {
            star = p;
        }
    }
    Ok(u.phase_shift(-star))
}

/// A permutation of `{0..m-1}` in one-line notation: `images[j] = σ(j)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(images: Vec<usize>) -> Result<Self> {
        let m = images.len();
        if m == 0 {
            return Err(Error::validation("permutation of an empty set"));
        }
        let mut seen = vec![false; m];
        for &i in &images {
            if i >= m || seen[i] {
                return Err(Error::validation(format!(
                    "{images:?} is not a bijection on {{0..{}}}",
                    m - 1
                )));
            }
            seen[i] = true;
        }
        Ok(Permutation(images))
    }

    /// Parses one-line images written 1-based, `[σ(1), …, σ(m)]`.
    pub fn from_one_based(images: &[usize]) -> Result<Self> {
        if images.contains(&0) {
            return Err(Error::validation(format!(
                "{images:?}: one-based images must be at least 1"
            )));
        }
        Self::new(images.iter().map(|i| i - 1).collect())
    }

    pub fn identity(m: usize) -> Self {
        Permutation((0..m).collect())
    }

    /// The transposition of `a` and `b` on `m` points.
    pub fn transposition(m: usize, a: usize, b: usize) -> Self {
        let mut v: Vec<usize> = (0..m).collect();
        v.swap(a, b);
        Permutation(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.0
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// `(self ∘ other)(j) = self(other(j))`.
    pub fn compose(&self, other: &Self) -> Self {
        assert_eq!(self.len(), other.len());
        Permutation(other.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.len()];
        for (j, &i) in self.0.iter().enumerate() {
            inv[i] = j;
        }
        Permutation(inv)
    }

    /// Cycle lengths, in order of smallest element.
    pub fn cycle_lengths(&self) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut j = start;
            while !seen[j] {
                seen[j] = true;
                j = self.0[j];
                len += 1;
            }
            out.push(len);
        }
        out
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.one_based().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Permutation {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let images = Vec::<usize>::deserialize(d)?;
        Permutation::from_one_based(&images).map_err(serde::de::Error::custom)
    }
}

/// The 0/1 matrix with entry `(σ(j), j) = 1`.
pub fn permutation_matrix(sigma: &Permutation) -> UnitaryMatrix {
    let m = sigma.len();
    let mut p = ComplexMatrix::zeros(m);
    for j in 0..m {
        p[(sigma.apply(j), j)] = ONE;
    }
    UnitaryMatrix::trusted(p, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, FRAC_PI_6};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn tensor_identities_and_diagonal() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(i2.tensor(&i2).unwrap(), ComplexMatrix::identity(4));
        let z = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, -1.0]);
        let expect = ComplexMatrix::from_real(
            4,
            &[
                1., 0., 0., 0., 0., 1., 0., 0., 0., 0., -1., 0., 0., 0., 0., -1.,
            ],
        );
        assert_eq!(z.tensor(&i2).unwrap(), expect);
    }

    #[test]
    fn tensor_capacity_error() {
        let a = ComplexMatrix::identity(2);
        let err = a.tensor_capped(&a, 3).unwrap_err();
        assert!(matches!(err, Error::Capacity { dim: 4, max: 3 }));
    }

    #[test]
    fn norm_of_simple_cases() {
        assert!(close(ComplexMatrix::identity(5).operator_norm().unwrap(), 1.0, 1e-12));
        let m = ComplexMatrix::from_real(2, &[0.0, 0.0, 0.0, -2.0]);
        assert!(close(m.operator_norm().unwrap(), 2.0, 1e-12));
        assert_eq!(ComplexMatrix::zeros(3).operator_norm().unwrap(), 0.0);
    }

    #[test]
    fn norm_matches_closed_form_2x2() {
        // For a real 2x2 [[a,b],[c,d]] the squared singular values solve
        // s² − (a²+b²+c²+d²)s + (ad−bc)² = 0.
        let (a, b, c, d) = (0.3, -1.7, 2.2, 0.4);
        let m = ComplexMatrix::from_real(2, &[a, b, c, d]);
        let t = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let top = ((t + (t * t - 4.0 * det * det).sqrt()) / 2.0).sqrt();
        assert!(close(m.operator_norm().unwrap(), top, 1e-10 * top));
    }

    #[test]
    fn norm_is_deterministic() {
        let m = ComplexMatrix::from_fn(6, |r, c| C64::new((r * 7 + c) as f64 % 5.0, r as f64 - c as f64));
        assert_eq!(m.operator_norm().unwrap(), m.operator_norm().unwrap());
    }

    #[test]
    fn norm_reports_non_convergence() {
        let m = ComplexMatrix::diag(&[
            C64::new(1.0, 0.0),
            C64::new(0.999_999, 0.0),
            C64::new(0.999_998, 0.0),
            C64::new(0.999_997, 0.0),
        ]);
        let opts = NormOptions {
            max_steps: 3,
            ..NormOptions::default()
        };
        assert!(matches!(
            operator_norm_with(&m, &opts),
            Err(Error::Numeric { .. })
        ));
    }

    #[test]
    fn eigenphases_of_simple_unitaries() {
        assert_eq!(eigenphases(&UnitaryMatrix::identity(2)).unwrap(), vec![0.0, 0.0]);
        let p = eigenphases(&UnitaryMatrix::diag_phases(&[0.0, FRAC_PI_2])).unwrap();
        assert!(close(p[0], 0.0, 1e-12) && close(p[1], FRAC_PI_2, 1e-12));
    }

    #[test]
    fn eigenphases_pauli_x_matches_quadratic_formula() {
        // Closed form: eigenvalues of [[a,b],[c,d]] are (t ± sqrt(t²−4det))/2.
        let x = UnitaryMatrix::pauli_x();
        let m = x.matrix();
        let t = m.trace();
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = (t * t - det * 4.0).sqrt();
        let mut expect = [((t + disc) / 2.0).arg(), ((t - disc) / 2.0).arg()];
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let p = eigenphases(&x).unwrap();
        assert!(close(p[0], expect[0], 1e-12));
        assert!(close(p[1], expect[1], 1e-12));
        assert!(close(p[0], 0.0, 1e-12) && close(p[1], PI, 1e-12));
    }

    #[test]
    fn eigenphases_rejects_large_defect() {
        let m = ComplexMatrix::from_real(2, &[1.0, 0.0, 0.0, 1.1]);
        let u = UnitaryMatrix::with_tolerance(m, 1.0).unwrap();
        assert!(matches!(eigenphases(&u), Err(Error::Precondition(_))));
    }

    #[test]
    fn spectrum_residual_uses_char_poly_above_four() {
        let phases = [0.1, 0.5, -1.0, 2.0, 3.0];
        let u = UnitaryMatrix::diag_phases(&phases);
        let mut sorted = phases.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(spectrum_residual(u.matrix(), &sorted).unwrap() < 1e-12);
        sorted[0] += 0.1;
        assert!(spectrum_residual(u.matrix(), &sorted).unwrap() > 1e-3);
    }

    #[test]
    fn phase_alignment_examples() {
        let a = phase_align_to_identity(&UnitaryMatrix::diag_phases(&[FRAC_PI_3, FRAC_PI_3])).unwrap();
        assert!(close(a.psi, -FRAC_PI_3, 1e-12) && close(a.delta, 0.0, 1e-12));
        let b = phase_align_to_identity(&UnitaryMatrix::diag_phases(&[0.0, PI])).unwrap();
        assert!(close(b.delta, 2f64.sqrt(), 1e-12));
        assert!(close(b.psi.abs(), FRAC_PI_2, 1e-12));
        let eps = 0.01;
        let c = phase_align_to_identity(&UnitaryMatrix::diag_phases(&[0.0, eps])).unwrap();
        assert!(c.delta <= eps);
    }

    #[test]
    fn alignment_wraps_across_pi() {
        let a = align_phases(&[-3.0, 3.0]);
        let width = 2.0 * PI - 6.0;
        assert!(close(a.delta, 2.0 * (width / 4.0).sin(), 1e-12));
        assert!(close(a.psi.abs(), PI, 1e-9));
    }

    #[test]
    fn scalar_detection() {
        let u = ComplexMatrix::diag(&[C64::i(), C64::i()]);
        assert!(close(is_scalar_multiple_of_identity(&u, 1e-9).unwrap(), FRAC_PI_2, 1e-12));
        assert!(is_scalar_multiple_of_identity(UnitaryMatrix::pauli_x().matrix(), 1e-9).is_none());
        let mut p = ComplexMatrix::identity(2);
        p[(0, 1)] = C64::new(1e-12, 0.0);
        assert_eq!(is_scalar_multiple_of_identity(&p, 1e-9), Some(0.0));
    }

    #[test]
    fn rotation_examples() {
        let u = UnitaryMatrix::diag_phases(&[FRAC_PI_4, FRAC_PI_4]);
        let r = rotate_to_contain_one(&u).unwrap();
        assert!(r.matrix().distance(&ComplexMatrix::identity(2)).unwrap() < 1e-12);
        let u = UnitaryMatrix::diag_phases(&[FRAC_PI_6, PI]);
        let r = rotate_to_contain_one(&u).unwrap();
        let expect = UnitaryMatrix::diag_phases(&[0.0, 5.0 * FRAC_PI_6]);
        assert!(r.matrix().distance(expect.matrix()).unwrap() < 1e-12);
        // Tie between ±a goes to +a.
        let u = UnitaryMatrix::diag_phases(&[-0.5, 0.5]);
        let r = rotate_to_contain_one(&u).unwrap();
        assert!(close(r.matrix()[(1, 1)].arg(), 0.0, 1e-12));
    }

    #[test]
    fn permutation_matrices() {
        assert_eq!(
            permutation_matrix(&Permutation::identity(3)).into_matrix(),
            ComplexMatrix::identity(3)
        );
        assert_eq!(
            permutation_matrix(&Permutation::transposition(2, 0, 1)),
            UnitaryMatrix::pauli_x()
        );
        let cycle = Permutation::new(vec![1, 2, 0]).unwrap();
        let p = permutation_matrix(&cycle);
        let m = p.matrix();
        assert_eq!(m[(1, 0)], ONE);
        assert_eq!(m[(2, 1)], ONE);
        assert_eq!(m[(0, 2)], ONE);
        assert_eq!(m.mul(m).mul(m), ComplexMatrix::identity(3));
        assert!(Permutation::new(vec![0, 0, 1]).is_err());
        assert!(Permutation::from_one_based(&[0, 1]).is_err());
    }

    #[test]
    fn partial_trace_of_product_tensor() {
        let a = ComplexMatrix::from_fn(2, |r, c| C64::new(r as f64, c as f64 + 1.0));
        let b = ComplexMatrix::from_fn(3, |r, c| C64::new((r + c) as f64, 0.5));
        let t = a.tensor(&b).unwrap();
        let pt = t.partial_trace_tail(2).unwrap();
        let expect = a.scale(b.trace() / 3.0);
        assert!(pt.sub(&expect).max_abs_entry() < 1e-14);
    }

    #[test]
    fn embed_matches_tensor() {
        let a = ComplexMatrix::from_fn(2, |r, c| C64::new(r as f64 - c as f64, 1.0));
        let direct = ComplexMatrix::identity(3)
            .tensor(&a)
            .unwrap()
            .tensor(&ComplexMatrix::identity(2))
            .unwrap();
        assert_eq!(a.embed(3, 2).unwrap(), direct);
    }

    #[test]
    fn serde_nested_pairs() {
        let m = ComplexMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.0, -1.0)],
            vec![C64::new(0.5, 0.25), ZERO],
        ])
        .unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, "[[[1.0,0.0],[0.0,-1.0]],[[0.5,0.25],[0.0,0.0]]]");
        let back: ComplexMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<ComplexMatrix>("[[[1,0]],[[0,0]]]").is_err());
    }
}
