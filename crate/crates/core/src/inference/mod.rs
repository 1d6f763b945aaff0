//! Model-based inference: in-sample residuals, diagonal covariance
//! estimators, HZ/VT/mixed variances with the trace correction, and normal
//! confidence intervals.

mod analyze;
mod cov;
mod quantile;
mod variance;

pub use analyze::analyze_period;
pub use cov::{cov_homoskedastic, cov_hrk, cov_jackknife, residuals};
pub use quantile::{confidence_interval, inverse_normal_cdf, z_quantile};
pub use variance::{mixed_bounds, mixed_fallback, variance_estimates};

use nalgebra::DVector;
use serde::Serialize;

use crate::estimators::Method;

/// In-sample regression errors for the two directions.
#[derive(Debug, Clone)]
pub struct Residuals {
    /// Hᵘ⊥y_T = y_T − Y0α̂, length N0 (HZ side).
    pub eps_t_hat: DVector<f64>,
    /// Hᵛ⊥y_N = y_N − Y0ᵀβ̂, length T0 (VT side).
    pub eps_n_hat: DVector<f64>,
}

/// Which diagonal covariance estimator produced a `CovEstimate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CovKind {
    Homoskedastic,
    Jackknife,
    Hrk,
}

/// Diagonal estimates of Σ_T (length N0) and Σ_N (length T0).
#[derive(Debug, Clone)]
pub struct CovEstimate {
    pub sigma_t_hat: DVector<f64>,
    pub sigma_n_hat: DVector<f64>,
    pub kind: CovKind,
}

/// Analytic envelope for the mixed variance under heteroskedasticity; the
/// two ends coincide when both diagonals are constant.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MixedBounds {
    pub v_mix_min: f64,
    pub v_mix_max: f64,
}

/// Which regression directions degenerated to zero in-sample error, making
/// the corresponding interval collapse onto the point estimate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Degeneracy {
    pub hz_degenerate: bool,
    pub vt_degenerate: bool,
}

/// Full inference output for one post-treatment period.
#[derive(Debug, Clone, Serialize)]
pub struct IntervalReport {
    pub point: f64,
    pub v_hz: f64,
    pub v_vt: f64,
    /// Raw mixed variance; may be negative, in which case `v_mix_used`
    /// conservatively falls back to `v_hz + v_vt`.
    pub v_mix: f64,
    pub v_mix_used: f64,
    pub mix_fallback_used: bool,
    pub trace_term: f64,
    pub bounds: MixedBounds,
    /// Coverage level θ; intervals use the z_{θ/2} normal quantile.
    pub level: f64,
    pub ci_hz: (f64, f64),
    pub ci_vt: (f64, f64),
    pub ci_mix: (f64, f64),
    pub degeneracy: Degeneracy,
    pub method: Method,
    pub cov_kind: CovKind,
    /// Set when a directional variance came out negative (possible for the
    /// unbiased HRK diagonals); the interval then uses max(v, 0).
    pub negative_variance_flagged: bool,
}
