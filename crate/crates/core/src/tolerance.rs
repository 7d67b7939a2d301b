use serde::{Deserialize, Serialize};

/// Largest matrix dimension any tensor product may produce.
pub const DEFAULT_MAX_DIM: usize = 1 << 14;

/// Unitarity and scalar-detection tolerance for validated inputs.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Relative tolerance of the iterative solvers.
pub const SOLVER_TOL: f64 = 1e-10;

/// Coefficients below this are dropped by explicit normalization.
pub const PRUNE_TOL: f64 = 1e-14;

/// Coefficient tolerance used when comparing floating word polynomials.
pub const WORD_EQ_TOL: f64 = 1e-12;

/// Tolerances shared by the analyzers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Unitarity of inputs and the scalar test on telescope factors.
    pub validation: f64,
    /// Verification of extension candidates on exact tails.
    pub verification: f64,
    /// Maximal consecutive ratio accepted as a geometric decay.
    pub ratio_threshold: f64,
    /// Telescope defects at or above this floor over a whole window count
    /// as a divergence signal.
    pub divergence_floor: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            validation: VALIDATION_TOL,
            verification: 1e-10,
            ratio_threshold: 0.9,
            divergence_floor: 1e-6,
        }
    }
}
