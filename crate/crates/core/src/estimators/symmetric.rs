//! Minimum-norm OLS, PCR and ridge: the class where HZ = VT.

use nalgebra::DVector;

use crate::error::Result;
use crate::panel::Blocks;
use crate::spectral::{rank_k_truncate, SpectralCache};

use super::{FitResult, Method};

/// Shrinkage profile applied to each spectral coefficient: OLS/PCR use 1/s,
/// ridge uses s/(s²+λ₂).
fn spectral_fit(
    blocks: &Blocks,
    cache: &SpectralCache,
    method: Method,
    gain: impl Fn(f64) -> f64,
) -> FitResult {
    // α̂ = V·diag(gain)·Uᵀy_T, β̂ = U·diag(gain)·Vᵀy_N
    let mut ut_yt = cache.u.transpose() * &blocks.y_t;
    let mut vt_yn = cache.v.transpose() * &blocks.y_n;
    for l in 0..cache.rank {
        let g = gain(cache.s[l]);
        ut_yt[l] *= g;
        vt_yn[l] *= g;
    }
    let alpha: DVector<f64> = &cache.v * ut_yt;
    let beta: DVector<f64> = &cache.u * vt_yn;
    let point_hz = blocks.y_n.dot(&alpha);
    let point_vt = blocks.y_t.dot(&beta);
    FitResult {
        alpha_hat: Some(alpha),
        beta_hat: Some(beta),
        point_hz: Some(point_hz),
        point_vt: Some(point_vt),
        method,
        intercepts: None,
    }
}

/// α̂ = Y0†y_T and β̂ = (Y0ᵀ)†y_N; both points equal Σ (1/s_ℓ)⟨y_N,v_ℓ⟩⟨u_ℓ,y_T⟩.
pub fn fit_ols_minnorm(blocks: &Blocks, cache: &SpectralCache) -> FitResult {
    spectral_fit(blocks, cache, Method::OlsMinNorm, |s| 1.0 / s)
}

/// Min-norm OLS against the rank-k truncation of Y0.
pub fn fit_pcr(blocks: &Blocks, cache: &SpectralCache, k: usize) -> Result<FitResult> {
    let truncated = rank_k_truncate(cache, k)?;
    let mut fit = spectral_fit(blocks, &truncated, Method::Pcr { k }, |s| 1.0 / s);
    fit.method = Method::Pcr { k };
    Ok(fit)
}

/// Ridge with penalty λ₂ > 0, computed spectrally.
pub fn fit_ridge(blocks: &Blocks, cache: &SpectralCache, lambda2: f64) -> Result<FitResult> {
    if lambda2 <= 0.0 {
        return Err(crate::error::Error::NonPositiveLambda(lambda2));
    }
    Ok(spectral_fit(blocks, cache, Method::Ridge { lambda2 }, |s| {
        s / (s * s + lambda2)
    }))
}
