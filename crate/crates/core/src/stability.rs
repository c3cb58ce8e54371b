//! Spectral certificate for an equilibrium: the Jacobian
//! `-A + diag(b_i / x_i^2)` is symmetric, so its spectrum is real and
//! long-term voltage stability reduces to all eigenvalues being negative.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{eval_jacobian, SystemData};

/// Relative threshold below which the smallest `|eigenvalue|` marks the
/// point as a non-hyperbolic suspect.
pub const DEFAULT_HYPER_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub hurwitz: bool,
    /// `min |eigenvalue|`.
    pub hyperbolicity_margin: f64,
    pub non_hyperbolic_suspect: bool,
    pub long_term_stable: bool,
    /// Only determined when every `b_i` has the same sign.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unique_stable: Option<bool>,
}

pub fn assess(sys: &SystemData, x_bar: &[f64]) -> Result<StabilityReport> {
    assess_with(sys, x_bar, DEFAULT_HYPER_TOL)
}

/// `hyper_tol` is relative to `max(max |eigenvalue|, max_i A_ii)`.
pub fn assess_with(sys: &SystemData, x_bar: &[f64], hyper_tol: f64) -> Result<StabilityReport> {
    let jac = eval_jacobian(sys, x_bar)?;
    let jac = (&jac + jac.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);

    let max_abs = eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let diag_scale = sys.a().diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = max_abs.max(diag_scale);
    let hyperbolicity_margin = eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let non_hyperbolic_suspect = hyperbolicity_margin <= hyper_tol * scale;

    let hurwitz = eigenvalues.last().is_some_and(|&v| v < 0.0);
    let b = sys.b();
    let same_sign = b.iter().all(|v| *v > 0.0) || b.iter().all(|v| *v < 0.0);
    Ok(StabilityReport {
        eigenvalues,
        hurwitz,
        hyperbolicity_margin,
        non_hyperbolic_suspect,
        long_term_stable: hurwitz,
        unique_stable: same_sign.then_some(hurwitz),
    })
}
