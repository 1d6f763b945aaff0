//! SVD cache, pseudoinverse, rank truncation and hat matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Default relative cutoff for the numerical rank.
pub const DEFAULT_RTOL: f64 = 1e-10;

/// Thin SVD of Y0 restricted to the retained singular triples.
#[derive(Debug, Clone)]
pub struct SpectralCache {
    /// Left singular vectors, N0×R.
    pub u: DMatrix<f64>,
    /// Positive singular values, descending.
    pub s: DVector<f64>,
    /// Right singular vectors, T0×R.
    pub v: DMatrix<f64>,
    /// Numerical rank.
    pub rank: usize,
    /// Relative cutoff used.
    pub rtol: f64,
    n0: usize,
    t0: usize,
}

impl SpectralCache {
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn t0(&self) -> usize {
        self.t0
    }

    /// Reconstruct the (possibly truncated) matrix U·diag(s)·Vᵀ.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for l in 0..self.rank {
            us.column_mut(l).scale_mut(self.s[l]);
        }
        &us * self.v.transpose()
    }

    /// Apply Y0 to a vector without forming the matrix.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.v.transpose() * x;
        for l in 0..self.rank {
            coeffs[l] *= self.s[l];
        }
        &self.u * coeffs
    }

    /// Apply Y0ᵀ to a vector.
    pub fn apply_transpose(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.u.transpose() * x;
        for l in 0..self.rank {
            coeffs[l] *= self.s[l];
        }
        &self.v * coeffs
    }

    /// Apply Y0† to a vector: V·diag(1/s)·Uᵀx (0/0 = 0 convention for R = 0).
    pub fn pinv_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.u.transpose() * x;
        for l in 0..self.rank {
            coeffs[l] /= self.s[l];
        }
        &self.v * coeffs
    }

    /// Apply (Y0ᵀ)† = (Y0†)ᵀ to a vector.
    pub fn pinv_transpose_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut coeffs = self.v.transpose() * x;
        for l in 0..self.rank {
            coeffs[l] /= self.s[l];
        }
        &self.u * coeffs
    }

    /// Σ_ℓ 1/s_ℓ², the trace tr(Y0†(Y0ᵀ)†).
    pub fn inv_sq_trace(&self) -> f64 {
        self.s.iter().map(|s| 1.0 / (s * s)).sum()
    }
}

/// Thin SVD with numerical rank R = #{ℓ : s_ℓ > rtol·s₁}.
pub fn svd_decompose(y0: &DMatrix<f64>, rtol: f64) -> Result<SpectralCache> {
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (n0, t0) = y0.shape();
    let svd = y0.clone().svd(true, true);
    let u_full = svd.u.expect("svd requested u");
    let vt_full = svd.v_t.expect("svd requested v_t");
    let sv = &svd.singular_values;

    let s1 = sv.iter().cloned().fold(0.0_f64, f64::max);
    let rank = sv.iter().filter(|&&s| s > rtol * s1).count();

    let mut u = DMatrix::zeros(n0, rank);
    let mut v = DMatrix::zeros(t0, rank);
    let mut s = DVector::zeros(rank);
    for l in 0..rank {
        u.set_column(l, &u_full.column(l));
        v.set_column(l, &vt_full.row(l).transpose());
        s[l] = sv[l];
    }
    Ok(SpectralCache {
        u,
        s,
        v,
        rank,
        rtol,
        n0,
        t0,
    })
}

/// Moore-Penrose pseudoinverse Y0† = V·diag(1/s)·Uᵀ, T0×N0.
pub fn pseudoinverse(cache: &SpectralCache) -> DMatrix<f64> {
    let mut vs = cache.v.clone();
    for l in 0..cache.rank {
        vs.column_mut(l).scale_mut(1.0 / cache.s[l]);
    }
    &vs * cache.u.transpose()
}

/// Restrict the cache to the leading k singular triples.
pub fn rank_k_truncate(cache: &SpectralCache, k: usize) -> Result<SpectralCache> {
    if k == 0 || k > cache.rank {
        return Err(Error::KOutOfRange {
            k,
            rank: cache.rank,
        });
    }
    Ok(SpectralCache {
        u: cache.u.columns(0, k).into_owned(),
        s: cache.s.rows(0, k).into_owned(),
        v: cache.v.columns(0, k).into_owned(),
        rank: k,
        rtol: cache.rtol,
        n0: cache.n0,
        t0: cache.t0,
    })
}

/// Projectors Hᵘ = UUᵀ (N0×N0) and Hᵛ = VVᵀ (T0×T0).
pub fn hat_matrices(cache: &SpectralCache) -> (DMatrix<f64>, DMatrix<f64>) {
    let h_u = &cache.u * cache.u.transpose();
    let h_v = &cache.v * cache.v.transpose();
    (h_u, h_v)
}

/// Minimum number of leading singular values capturing at least `threshold`
/// of the spectral energy Σ s_ℓ².
pub fn energy_rank(cache: &SpectralCache, threshold: f64) -> usize {
    let total: f64 = cache.s.iter().map(|s| s * s).sum();
    if total == 0.0 {
        return 0;
    }
    let mut acc = 0.0;
    for l in 0..cache.rank {
        acc += cache.s[l] * cache.s[l];
        if acc >= threshold * total {
            return l + 1;
        }
    }
    cache.rank
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_svd() {
        let c = svd_decompose(&DMatrix::identity(3, 3), 1e-10).unwrap();
        assert_eq!(c.rank, 3);
        for l in 0..3 {
            assert_abs_diff_eq!(c.s[l], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_one_outer_product() {
        let u = DVector::from_vec(vec![0.6, 0.8, 0.0]);
        let v = DVector::from_vec(vec![1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()]);
        let y0 = &u * v.transpose();
        let c = svd_decompose(&y0, 1e-10).unwrap();
        assert_eq!(c.rank, 1);
        assert_abs_diff_eq!(c.s[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_matrix_rank_zero() {
        let c = svd_decompose(&DMatrix::zeros(3, 2), 1e-10).unwrap();
        assert_eq!(c.rank, 0);
        let p = pseudoinverse(&c);
        assert_eq!(p.shape(), (2, 3));
        assert!(p.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn non_finite_rejected() {
        let mut m = DMatrix::zeros(2, 2);
        m[(0, 0)] = f64::NAN;
        assert!(matches!(
            svd_decompose(&m, 1e-10).unwrap_err(),
            Error::NonFiniteInput
        ));
    }

    #[test]
    fn pinv_matches_normal_equations_on_full_rank() {
        // random full-rank 4×3: Y0† = (Y0ᵀY0)⁻¹Y0ᵀ
        let y0 = DMatrix::from_row_slice(
            4,
            3,
            &[1.3, -0.2, 0.7, 0.5, 2.1, -1.0, -0.4, 0.9, 0.3, 1.1, 0.6, -0.8],
        );
        let c = svd_decompose(&y0, 1e-10).unwrap();
        let pinv = pseudoinverse(&c);
        let gram = y0.transpose() * &y0;
        let oracle = gram.try_inverse().unwrap() * y0.transpose();
        assert_abs_diff_eq!(pinv, oracle, epsilon = 1e-9);
    }

    #[test]
    fn moore_penrose_identities() {
        let y0 = DMatrix::from_row_slice(3, 4, &[1.0, 2.0, 3.0, 4.0, 2.0, 4.0, 6.0, 8.0, 0.5, -1.0, 2.5, 0.0]);
        let c = svd_decompose(&y0, 1e-10).unwrap();
        let p = pseudoinverse(&c);
        assert_abs_diff_eq!(&y0 * &p * &y0, y0.clone(), epsilon = 1e-8);
        assert_abs_diff_eq!(&p * &y0 * &p, p.clone(), epsilon = 1e-8);
        let yp = &y0 * &p;
        let py = &p * &y0;
        assert_abs_diff_eq!(yp.transpose(), yp.clone(), epsilon = 1e-8);
        assert_abs_diff_eq!(py.transpose(), py.clone(), epsilon = 1e-8);
    }

    #[test]
    fn truncate_diagonal() {
        let y0 = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let c = svd_decompose(&y0, 1e-10).unwrap();
        let t = rank_k_truncate(&c, 1).unwrap();
        assert_eq!(t.rank, 1);
        assert_abs_diff_eq!(t.s[0], 3.0, epsilon = 1e-12);
        let rec = t.reconstruct();
        let mut expect = DMatrix::zeros(3, 3);
        expect[(0, 0)] = 3.0;
        assert_abs_diff_eq!(rec, expect, epsilon = 1e-10);
        assert!(matches!(
            rank_k_truncate(&c, 4).unwrap_err(),
            Error::KOutOfRange { .. }
        ));
        // k = R leaves the cache unchanged
        let full = rank_k_truncate(&c, 3).unwrap();
        assert_abs_diff_eq!(full.reconstruct(), y0, epsilon = 1e-10);
    }

    #[test]
    fn hats_are_projectors_with_trace_rank() {
        let y0 = DMatrix::from_row_slice(4, 3, &[1.0, 0.1, 0.0, 0.0, 1.0, 0.2, 0.3, 0.0, 1.0, 0.5, 0.5, 0.5]);
        let c = svd_decompose(&y0, 1e-10).unwrap();
        let (h_u, h_v) = hat_matrices(&c);
        assert_abs_diff_eq!(&h_u * &h_u, h_u.clone(), epsilon = 1e-10);
        assert_abs_diff_eq!(h_u.transpose(), h_u.clone(), epsilon = 1e-10);
        assert_abs_diff_eq!(h_u.trace(), c.rank as f64, epsilon = 1e-8);
        assert_abs_diff_eq!(h_v.trace(), c.rank as f64, epsilon = 1e-8);
    }

    #[test]
    fn energy_rank_thresholds() {
        let y0 = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 1.0, 0.1]));
        let c = svd_decompose(&y0, 1e-10).unwrap();
        assert_eq!(energy_rank(&c, 0.5), 1);
        assert_eq!(energy_rank(&c, 0.999), 2);
        assert_eq!(energy_rank(&c, 1.0), 3);
    }
}
