//! The single-period inference pipeline: fit, residuals, covariance,
//! variances, intervals.

use crate::error::{Error, Result};
use crate::estimators::{fit_ols_minnorm, fit_pcr, fit_ridge, Method, SolverConfig};
use crate::panel::Blocks;
use crate::spectral::{hat_matrices, rank_k_truncate, svd_decompose, DEFAULT_RTOL};

use super::cov::{cov_homoskedastic_lenient, cov_hrk, cov_jackknife, residuals};
use super::quantile::confidence_interval;
use super::variance::{mixed_bounds, mixed_fallback, variance_estimates};
use super::{CovKind, Degeneracy, IntervalReport};

/// Point estimate plus all three variance estimates and intervals for one
/// post-treatment period. Only the symmetric estimator class is supported;
/// for PCR the rank-k truncated design replaces Y0 throughout inference
/// (hats, pseudoinverse, and the effective rank in denominators).
pub fn analyze_period(
    blocks: &Blocks,
    method: Method,
    cov_kind: CovKind,
    theta: f64,
    _cfg: &SolverConfig,
) -> Result<IntervalReport> {
    if !method.is_symmetric() {
        return Err(Error::UnsupportedMethod);
    }
    let cache = svd_decompose(&blocks.y0, DEFAULT_RTOL)?;
    let (fit, icache) = match method {
        Method::OlsMinNorm => (fit_ols_minnorm(blocks, &cache), cache),
        Method::Pcr { k } => {
            let fit = fit_pcr(blocks, &cache, k)?;
            (fit, rank_k_truncate(&cache, k)?)
        }
        Method::Ridge { lambda2 } => (fit_ridge(blocks, &cache, lambda2)?, cache),
        _ => unreachable!("asymmetric methods rejected above"),
    };

    let res = residuals(blocks, &icache);
    let degeneracy = Degeneracy {
        hz_degenerate: res.eps_t_hat.norm() <= 1e-12 * (1.0 + blocks.y_t.norm()),
        vt_degenerate: res.eps_n_hat.norm() <= 1e-12 * (1.0 + blocks.y_n.norm()),
    };

    let cov = match cov_kind {
        CovKind::Homoskedastic => cov_homoskedastic_lenient(&res, icache.rank),
        CovKind::Jackknife => {
            let (h_u, h_v) = hat_matrices(&icache);
            cov_jackknife(&res, &h_u, &h_v)
        }
        CovKind::Hrk => {
            let (h_u, h_v) = hat_matrices(&icache);
            cov_hrk(&res, &h_u, &h_v)?
        }
    };

    let (v_hz, v_vt, v_mix, trace_term) = variance_estimates(&fit, &cov, &icache)?;
    let bounds = mixed_bounds(&fit, &cov, &icache)?;
    let (v_mix_used, mix_fallback_used) = mixed_fallback(v_hz, v_vt, v_mix);
    let negative_variance_flagged = v_hz < 0.0 || v_vt < 0.0 || v_mix_used < 0.0;

    let point = fit.point();
    let ci_hz = confidence_interval(point, v_hz.max(0.0), theta)?;
    let ci_vt = confidence_interval(point, v_vt.max(0.0), theta)?;
    let ci_mix = confidence_interval(point, v_mix_used.max(0.0), theta)?;

    Ok(IntervalReport {
        point,
        v_hz,
        v_vt,
        v_mix,
        v_mix_used,
        mix_fallback_used,
        trace_term,
        bounds,
        level: theta,
        ci_hz,
        ci_vt,
        ci_mix,
        degeneracy,
        method,
        cov_kind,
        negative_variance_flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::Direction;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn blocks() -> Blocks {
        let y0 = DMatrix::from_row_slice(
            6,
            4,
            &[
                1.0, 0.3, -0.2, 0.8, 0.5, 1.1, 0.4, -0.6, -0.7, 0.2, 0.9, 0.3, 0.6, -0.5, 1.3,
                0.1, 0.2, 0.7, -0.4, 1.0, 0.9, 0.1, 0.5, -0.3,
            ],
        );
        Blocks::from_parts(
            DVector::from_vec(vec![0.4, -0.2, 0.9, 0.6]),
            y0,
            DVector::from_vec(vec![1.1, 0.3, -0.5, 0.8, 0.2, -0.4]),
        )
        .unwrap()
    }

    #[test]
    fn pipeline_runs_for_all_covariances() {
        // Hrk is excluded here: with R = T0 the VT hat is the identity and
        // its Hadamard-squared system is exactly singular (see hrk test).
        let b = blocks();
        for kind in [CovKind::Homoskedastic, CovKind::Jackknife] {
            let rep =
                analyze_period(&b, Method::OlsMinNorm, kind, 0.05, &SolverConfig::default()).unwrap();
            assert!(rep.ci_mix.0 <= rep.point && rep.point <= rep.ci_mix.1);
            assert_eq!(rep.cov_kind, kind);
            assert!(!rep.degeneracy.hz_degenerate);
            // full column rank: VT side has zero residuals
            assert!(rep.degeneracy.vt_degenerate);
            assert_eq!(rep.v_vt, 0.0);
            // degenerate side: the VT interval collapses on the point
            assert_abs_diff_eq!(rep.ci_vt.0, rep.point, epsilon = 1e-12);
        }
    }

    #[test]
    fn hrk_pipeline_on_low_leverage_design() {
        // rank-deficient, incoherent design: every leverage below 1/2 on
        // both sides, so the HRK systems are well conditioned
        let a = DMatrix::from_row_slice(
            8,
            2,
            &[1.0, 0.4, -0.6, 1.0, 0.8, -0.3, 0.2, 0.9, -1.0, 0.5, 0.7, 0.6, 0.3, -0.8, 0.9, 0.2],
        );
        let f = DMatrix::from_row_slice(2, 6, &[0.9, -0.4, 1.2, 0.5, -0.7, 0.3, 0.3, 1.0, -0.8, 0.6, 0.4, -0.9]);
        let y0 = a * f;
        let b = Blocks::from_parts(
            DVector::from_vec(vec![0.5, 1.0, -0.2, 0.8, 0.3, -0.6]),
            y0,
            DVector::from_vec(vec![0.7, -0.9, 1.3, 0.2, 0.6, -0.1, 0.4, -0.5]),
        )
        .unwrap();
        let rep = analyze_period(&b, Method::OlsMinNorm, CovKind::Hrk, 0.05, &SolverConfig::default()).unwrap();
        assert!(rep.v_hz > 0.0 && rep.v_vt > 0.0);
        assert!(rep.ci_mix.0 < rep.ci_mix.1);
    }

    #[test]
    fn pcr_uses_truncated_rank() {
        let b = blocks();
        let rep = analyze_period(
            &b,
            Method::Pcr { k: 2 },
            CovKind::Homoskedastic,
            0.05,
            &SolverConfig::default(),
        )
        .unwrap();
        // rank 2 < T0 = 4 leaves VT residual degrees of freedom
        assert!(!rep.degeneracy.vt_degenerate);
        assert!(rep.v_vt > 0.0);
    }

    #[test]
    fn intervals_center_on_point_with_expected_width() {
        let b = blocks();
        let rep = analyze_period(
            &b,
            Method::Ridge { lambda2: 0.3 },
            CovKind::Jackknife,
            0.05,
            &SolverConfig::default(),
        )
        .unwrap();
        let half = super::super::z_quantile(0.05) * rep.v_hz.max(0.0).sqrt();
        assert_abs_diff_eq!(rep.ci_hz.1 - rep.point, half, epsilon = 1e-12);
        assert_abs_diff_eq!(rep.point - rep.ci_hz.0, half, epsilon = 1e-12);
    }

    #[test]
    fn asymmetric_method_rejected() {
        let b = blocks();
        let err = analyze_period(
            &b,
            Method::Simplex { lambda: 1e-6, direction: Direction::Hz },
            CovKind::Homoskedastic,
            0.05,
            &SolverConfig::default(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnsupportedMethod));
    }

    #[test]
    fn report_serializes_with_fixed_field_names() {
        let b = blocks();
        let rep = analyze_period(&b, Method::OlsMinNorm, CovKind::Homoskedastic, 0.05, &SolverConfig::default())
            .unwrap();
        let json = serde_json::to_value(&rep).unwrap();
        for key in [
            "point",
            "v_hz",
            "v_vt",
            "v_mix",
            "v_mix_used",
            "mix_fallback_used",
            "trace_term",
            "bounds",
            "level",
            "ci_hz",
            "ci_vt",
            "ci_mix",
            "degeneracy",
            "method",
            "cov_kind",
            "negative_variance_flagged",
        ] {
            assert!(json.get(key).is_some(), "missing field {key}");
        }
        assert!(json["bounds"].get("v_mix_min").is_some());
        assert!(json["degeneracy"].get("hz_degenerate").is_some());
    }
}
