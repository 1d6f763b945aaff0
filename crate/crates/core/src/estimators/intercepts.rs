//! Intercept handling: the twice-centered formulation that restores HZ = VT,
//! and the naive design-augmentation variant that breaks it.

use nalgebra::{DMatrix, DVector};

use crate::center::twice_center;
use crate::error::{Error, Result};
use crate::panel::Blocks;
use crate::spectral::{svd_decompose, DEFAULT_RTOL};

use super::{fit_ols_minnorm, fit_pcr, fit_ridge, Direction, FitResult, Intercepts, Method, SolverConfig};

/// Symmetric fit on the twice-centered control block with additive
/// intercepts α̂₀ = mean(y_T) and α̂₁ = mean(y_N) folded into both points.
pub fn fit_with_intercepts(blocks: &Blocks, method: Method, _cfg: &SolverConfig) -> Result<FitResult> {
    if !method.is_symmetric() {
        return Err(Error::UnsupportedMethod);
    }
    let centered = twice_center(blocks);
    let centered_blocks = Blocks {
        y_n: blocks.y_n.clone(),
        y0: centered.y0_centered.clone(),
        y_t: blocks.y_t.clone(),
        period_index: blocks.period_index,
    };
    let cache = svd_decompose(&centered.y0_centered, DEFAULT_RTOL)?;
    let mut fit = match method {
        Method::OlsMinNorm => fit_ols_minnorm(&centered_blocks, &cache),
        Method::Pcr { k } => fit_pcr(&centered_blocks, &cache, k.min(cache.rank.max(1)))?,
        Method::Ridge { lambda2 } => fit_ridge(&centered_blocks, &cache, lambda2)?,
        _ => unreachable!(),
    };
    let alpha0 = centered.time_intercept;
    let alpha1 = centered.unit_intercept;
    fit.point_hz = fit.point_hz.map(|p| p + alpha0 + alpha1);
    fit.point_vt = fit.point_vt.map(|p| p + alpha0 + alpha1);
    fit.intercepts = Some(Intercepts { alpha0, alpha1 });
    Ok(fit)
}

/// Min-norm OLS with the intercept as an appended all-ones column, without
/// centering. HZ and VT points generally differ under this formulation.
pub fn fit_ols_naive_intercept(blocks: &Blocks, direction: Direction) -> Result<f64> {
    let (design, target, predictor): (DMatrix<f64>, &DVector<f64>, &DVector<f64>) = match direction {
        Direction::Hz => (blocks.y0.clone(), &blocks.y_t, &blocks.y_n),
        Direction::Vt => (blocks.y0.transpose(), &blocks.y_n, &blocks.y_t),
    };
    let (rows, cols) = design.shape();
    let mut augmented = DMatrix::zeros(rows, cols + 1);
    augmented.view_mut((0, 0), (rows, cols)).copy_from(&design);
    augmented.column_mut(cols).fill(1.0);
    let cache = svd_decompose(&augmented, DEFAULT_RTOL)?;
    let w = cache.pinv_apply(target);
    let weights = w.rows(0, cols).into_owned();
    let intercept = w[cols];
    Ok(predictor.dot(&weights) + intercept)
}
