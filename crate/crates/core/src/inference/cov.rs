//! Residuals and the three diagonal covariance estimators.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result, Side};
use crate::panel::Blocks;
use crate::spectral::SpectralCache;

use super::{CovEstimate, CovKind, Residuals};

/// In-sample errors eps_t = y_T − Hᵘy_T and eps_n = y_N − Hᵛy_N.
///
/// For PCR inference pass the rank-k truncated cache; the hats and the
/// effective rank then all refer to the truncated design.
pub fn residuals(blocks: &Blocks, cache: &SpectralCache) -> Residuals {
    let proj_t = &cache.u * (cache.u.transpose() * &blocks.y_t);
    let proj_n = &cache.v * (cache.v.transpose() * &blocks.y_n);
    Residuals {
        eps_t_hat: &blocks.y_t - proj_t,
        eps_n_hat: &blocks.y_n - proj_n,
    }
}

/// σ̂²_T = ‖eps_t‖²/(N0−R) and σ̂²_N = ‖eps_n‖²/(T0−R) on the diagonals.
///
/// Errors with `DegenerateSide` when a denominator is zero, which happens
/// exactly when that direction has no residual degrees of freedom.
pub fn cov_homoskedastic(res: &Residuals, rank: usize) -> Result<CovEstimate> {
    let n0 = res.eps_t_hat.len();
    let t0 = res.eps_n_hat.len();
    if n0 <= rank {
        return Err(Error::DegenerateSide(Side::Hz));
    }
    if t0 <= rank {
        return Err(Error::DegenerateSide(Side::Vt));
    }
    let sigma_t = res.eps_t_hat.norm_squared() / (n0 - rank) as f64;
    let sigma_n = res.eps_n_hat.norm_squared() / (t0 - rank) as f64;
    Ok(CovEstimate {
        sigma_t_hat: DVector::from_element(n0, sigma_t),
        sigma_n_hat: DVector::from_element(t0, sigma_n),
        kind: CovKind::Homoskedastic,
    })
}

/// Same as `cov_homoskedastic`, but a side with zero denominator gets a
/// zero diagonal instead of an error. A zero denominator forces zero
/// residuals on that side, so zero is the only consistent value.
pub(crate) fn cov_homoskedastic_lenient(res: &Residuals, rank: usize) -> CovEstimate {
    let n0 = res.eps_t_hat.len();
    let t0 = res.eps_n_hat.len();
    let sigma_t = if n0 > rank {
        res.eps_t_hat.norm_squared() / (n0 - rank) as f64
    } else {
        0.0
    };
    let sigma_n = if t0 > rank {
        res.eps_n_hat.norm_squared() / (t0 - rank) as f64
    } else {
        0.0
    };
    CovEstimate {
        sigma_t_hat: DVector::from_element(n0, sigma_t),
        sigma_n_hat: DVector::from_element(t0, sigma_n),
        kind: CovKind::Homoskedastic,
    }
}

fn jackknife_diag(eps: &DVector<f64>, hat: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_fn(eps.len(), |l, _| {
        let leverage = 1.0 - hat[(l, l)];
        if leverage.abs() <= 1e-12 {
            // H_ℓℓ = 1 forces eps_ℓ = 0; entrywise pseudoinverse gives 0
            0.0
        } else {
            eps[l] * eps[l] / (leverage * leverage)
        }
    })
}

/// Jackknife (leverage-corrected EHW) diagonals eps²_ℓ/(1−H_ℓℓ)².
pub fn cov_jackknife(res: &Residuals, h_u: &DMatrix<f64>, h_v: &DMatrix<f64>) -> CovEstimate {
    CovEstimate {
        sigma_t_hat: jackknife_diag(&res.eps_t_hat, h_u),
        sigma_n_hat: jackknife_diag(&res.eps_n_hat, h_v),
        kind: CovKind::Jackknife,
    }
}

/// Solve (H⊥ ∘ H⊥)x = eps ∘ eps for the unbiased diagonal; errors when the
/// Hadamard-squared system has condition estimate above 1e12. A sufficient
/// condition for solvability is max_ℓ H_ℓℓ < 1/2 (strict diagonal dominance).
fn hrk_diag(eps: &DVector<f64>, hat: &DMatrix<f64>, side: Side) -> Result<DVector<f64>> {
    let n = eps.len();
    let mut system = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let perp = if i == j { 1.0 - hat[(i, j)] } else { -hat[(i, j)] };
            system[(i, j)] = perp * perp;
        }
    }
    let svd = system.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smin > 0.0) || smax / smin > 1e12 {
        return Err(Error::HrkUndefined(side));
    }
    let rhs = eps.component_mul(eps);
    svd.solve(&rhs, 0.0).map_err(|_| Error::HrkUndefined(side))
}

/// Hartley-Rao-Kiefer unbiased diagonal covariance estimator. Entries may be
/// negative; callers clamp or fall back when forming intervals.
pub fn cov_hrk(res: &Residuals, h_u: &DMatrix<f64>, h_v: &DMatrix<f64>) -> Result<CovEstimate> {
    Ok(CovEstimate {
        sigma_t_hat: hrk_diag(&res.eps_t_hat, h_u, Side::Hz)?,
        sigma_n_hat: hrk_diag(&res.eps_n_hat, h_v, Side::Vt)?,
        kind: CovKind::Hrk,
    })
}
