//! The SDID/ASC doubly robust combination.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::panel::Blocks;

/// ⟨y_T, β̂⟩ + ⟨y_N, α̂⟩ − ⟨β̂, Y0 α̂⟩, the form shared by SDID and the
/// augmented synthetic control with an HZ outcome model.
pub fn doubly_robust_combine(
    alpha_hat: &DVector<f64>,
    beta_hat: &DVector<f64>,
    blocks: &Blocks,
) -> Result<f64> {
    if alpha_hat.len() != blocks.n_pre_periods() || beta_hat.len() != blocks.n_controls() {
        return Err(Error::DimensionMismatch(format!(
            "alpha has {} entries (T0 = {}), beta has {} (N0 = {})",
            alpha_hat.len(),
            blocks.n_pre_periods(),
            beta_hat.len(),
            blocks.n_controls()
        )));
    }
    Ok(blocks.y_t.dot(beta_hat) + blocks.y_n.dot(alpha_hat) - beta_hat.dot(&(&blocks.y0 * alpha_hat)))
}
