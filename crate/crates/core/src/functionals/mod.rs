//! Weighted norms and variable-smoothness seminorms, together with the
//! functional inequalities they enter and their explicit constants.

mod grid;
mod hardy;
mod norms;
mod seminorm;
mod suites;
mod weights;

pub use grid::GridFunction;
pub use hardy::{classical_hardy_constant, hardy_classical_check, hardy_weighted_check};
pub use norms::{
    first_trace_constant, hardy_constant, improved_trace_check, improved_trace_constant, sobolev_norm,
    trace_inequality_check, trace_norm, ImprovedTraceChecker,
};
pub use seminorm::{seminorm_a, SeminormConfig, SeminormQuadrature, SeminormValue};
pub use suites::{
    hardy_classical_suite, hardy_weighted_suite, improved_trace_suite, random_extension, trace_suite, SuiteRow,
};
pub use weights::{phi_weights, LineWeights, PhiWeights};

/// Both sides of an inequality `lhs ≤ rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InequalityOutcome {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityOutcome {
    pub fn new(lhs: f64, rhs: f64) -> Self {
        Self {
            lhs,
            rhs,
            holds: lhs <= rhs,
        }
    }

    /// `1 - lhs/rhs`; zero when both sides vanish.
    pub fn margin(&self) -> f64 {
        if self.rhs > 0.0 {
            1.0 - self.lhs / self.rhs
        } else if self.lhs > 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }
}
