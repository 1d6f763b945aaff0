//! HZ/VT/mixed variance estimates, the spectral trace correction, the
//! analytic envelope for the mixed variance, and the conservative fallback.

use crate::error::{Error, Result};
use crate::estimators::FitResult;
use crate::spectral::SpectralCache;

use super::{CovEstimate, MixedBounds};

/// v_hz = β̂ᵀΣ̂_Tβ̂, v_vt = α̂ᵀΣ̂_Nα̂ and
/// v_mix = v_hz + v_vt − tr(Y0†Σ̂_T(Y0ᵀ)†Σ̂_N).
///
/// The trace is evaluated spectrally:
/// Σ_{ℓ,m} (1/(s_ℓ s_m))·(VᵀΣ̂_N V)_{ℓm}·(UᵀΣ̂_T U)_{mℓ}.
/// Returns (v_hz, v_vt, v_mix, trace_term); v_mix may be negative.
pub fn variance_estimates(
    fit: &FitResult,
    cov: &CovEstimate,
    cache: &SpectralCache,
) -> Result<(f64, f64, f64, f64)> {
    let alpha = fit.alpha_hat.as_ref().ok_or(Error::UnsupportedMethod)?;
    let beta = fit.beta_hat.as_ref().ok_or(Error::UnsupportedMethod)?;
    if beta.len() != cov.sigma_t_hat.len() || alpha.len() != cov.sigma_n_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "weights ({}, {}) vs covariance diagonals ({}, {})",
            beta.len(),
            alpha.len(),
            cov.sigma_t_hat.len(),
            cov.sigma_n_hat.len()
        )));
    }

    let v_hz: f64 = (0..beta.len()).map(|i| beta[i] * beta[i] * cov.sigma_t_hat[i]).sum();
    let v_vt: f64 = (0..alpha.len()).map(|t| alpha[t] * alpha[t] * cov.sigma_n_hat[t]).sum();

    // A = UᵀΣ̂_T U (R×R), B = VᵀΣ̂_N V (R×R), both via diagonal scaling
    let r = cache.rank;
    let mut trace_term = 0.0;
    if r > 0 {
        let mut sigt_u = cache.u.clone();
        for i in 0..sigt_u.nrows() {
            let w = cov.sigma_t_hat[i];
            for l in 0..r {
                sigt_u[(i, l)] *= w;
            }
        }
        let a = cache.u.transpose() * sigt_u;
        let mut sign_v = cache.v.clone();
        for t in 0..sign_v.nrows() {
            let w = cov.sigma_n_hat[t];
            for l in 0..r {
                sign_v[(t, l)] *= w;
            }
        }
        let b = cache.v.transpose() * sign_v;
        for l in 0..r {
            for m in 0..r {
                trace_term += b[(l, m)] * a[(m, l)] / (cache.s[l] * cache.s[m]);
            }
        }
    }

    Ok((v_hz, v_vt, v_hz + v_vt - trace_term, trace_term))
}

/// Analytic envelope [v_mix_min, v_mix_max] from the extreme diagonal
/// entries and tr(S⁻²); the ends coincide under homoskedasticity.
pub fn mixed_bounds(fit: &FitResult, cov: &CovEstimate, cache: &SpectralCache) -> Result<MixedBounds> {
    let alpha = fit.alpha_hat.as_ref().ok_or(Error::UnsupportedMethod)?;
    let beta = fit.beta_hat.as_ref().ok_or(Error::UnsupportedMethod)?;
    let fold = |d: &nalgebra::DVector<f64>| {
        d.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
    };
    let (min_t, max_t) = fold(&cov.sigma_t_hat);
    let (min_n, max_n) = fold(&cov.sigma_n_hat);
    let b2 = beta.norm_squared();
    let a2 = alpha.norm_squared();
    let tr = cache.inv_sq_trace();
    Ok(MixedBounds {
        v_mix_min: min_t * b2 + min_n * a2 - max_t * max_n * tr,
        v_mix_max: max_t * b2 + max_n * a2 - min_t * min_n * tr,
    })
}

/// Conservative fallback: a negative mixed variance is replaced by
/// v_hz + v_vt. Returns (v_used, fallback_triggered).
pub fn mixed_fallback(v_hz: f64, v_vt: f64, v_mix: f64) -> (f64, bool) {
    if v_mix < 0.0 {
        (v_hz + v_vt, true)
    } else {
        (v_mix, false)
    }
}
