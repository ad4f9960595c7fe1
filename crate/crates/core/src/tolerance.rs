use serde::{Deserialize, Serialize};

/// Numerical thresholds used by every check in the crate.
///
/// `abs` is the one exposed on the command line (`--tol` / `WCO_TOL`); the
/// others keep their defaults unless set programmatically.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative tolerance for sums of at most a few thousand terms.
    pub rel: f64,
    /// Absolute tolerance for residuals and oracle comparisons.
    pub abs: f64,
    /// Tolerance for comparisons against dense eigen/SVD oracles.
    pub oracle: f64,
    /// A Hermitian matrix is treated as positive semidefinite when its
    /// smallest eigenvalue is at least `-psd`.
    pub psd: f64,
    /// Acceptance threshold for families returned by the feasibility solver.
    pub solver: f64,
    /// Locations of a point measure closer than this (scaled by magnitude)
    /// are merged.
    pub merge: f64,
    /// Relative tolerance of the moment identity.
    pub moments: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rel: 1e-12,
            abs: 1e-10,
            oracle: 1e-9,
            psd: 1e-9,
            solver: 1e-8,
            merge: 1e-12,
            moments: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn with_abs(mut self, abs: f64) -> Self {
        self.abs = abs;
        self
    }

    /// `|a - b| <= rel * max(|a|, |b|)`, with exact equality for zeros.
    pub fn rel_eq(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.rel * a.abs().max(b.abs())
    }

    /// Whether two point-measure locations denote the same point.
    pub fn same_location(&self, a: f64, b: f64) -> bool {
        (a - b).abs() <= self.merge * 1f64.max(a.abs()).max(b.abs())
    }
}
