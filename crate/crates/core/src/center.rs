//! Twice-centering of the control block for intercept-based estimators.

use nalgebra::{DMatrix, DVector};

use crate::panel::Blocks;

/// Control block with zero row and column means, plus the removed means.
#[derive(Debug, Clone)]
pub struct CenteredBlocks {
    pub y0_centered: DMatrix<f64>,
    pub row_means: DVector<f64>,
    pub col_means: DVector<f64>,
    pub grand_mean: f64,
    /// Mean of y_t, the α̂₀ intercept source.
    pub time_intercept: f64,
    /// Mean of y_n, the α̂₁ intercept source.
    pub unit_intercept: f64,
}

/// Apply (I − (1/N0)11ᵀ) on the left and (I − (1/T0)11ᵀ) on the right of Y0.
pub fn twice_center(blocks: &Blocks) -> CenteredBlocks {
    let y0 = &blocks.y0;
    let (n0, t0) = y0.shape();
    let grand_mean = y0.iter().sum::<f64>() / (n0 * t0) as f64;
    let row_means = DVector::from_fn(n0, |i, _| y0.row(i).sum() / t0 as f64);
    let col_means = DVector::from_fn(t0, |t, _| y0.column(t).sum() / n0 as f64);
    let y0_centered =
        DMatrix::from_fn(n0, t0, |i, t| y0[(i, t)] - row_means[i] - col_means[t] + grand_mean);
    CenteredBlocks {
        y0_centered,
        row_means,
        col_means,
        grand_mean,
        time_intercept: blocks.y_t.mean(),
        unit_intercept: blocks.y_n.mean(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn blocks_from_y0(y0: DMatrix<f64>) -> Blocks {
        let (n0, t0) = y0.shape();
        Blocks::from_parts(DVector::zeros(t0), y0, DVector::zeros(n0)).unwrap()
    }

    #[test]
    fn constant_matrix_centers_to_zero() {
        let c = 3.5;
        let y0 = DMatrix::from_element(4, 3, c);
        let cb = twice_center(&blocks_from_y0(y0));
        assert!(cb.y0_centered.iter().all(|&x| x.abs() < 1e-12));
        assert_abs_diff_eq!(cb.grand_mean, c, epsilon = 1e-12);
        for m in cb.row_means.iter().chain(cb.col_means.iter()) {
            assert_abs_diff_eq!(*m, c, epsilon = 1e-12);
        }
    }

    #[test]
    fn centering_is_idempotent() {
        let y0 = DMatrix::from_row_slice(3, 4, &[1.0, 2.0, -1.0, 4.0, 0.5, 3.0, 2.0, -2.0, 1.5, 0.0, 1.0, 2.5]);
        let cb = twice_center(&blocks_from_y0(y0));
        // rows and columns are mean-zero
        for i in 0..3 {
            assert!(cb.y0_centered.row(i).sum().abs() < 1e-12);
        }
        for t in 0..4 {
            assert!(cb.y0_centered.column(t).sum().abs() < 1e-12);
        }
        // re-centering is a no-op
        let cb2 = twice_center(&blocks_from_y0(cb.y0_centered.clone()));
        assert_abs_diff_eq!(cb2.y0_centered, cb.y0_centered, epsilon = 1e-12);
    }

    #[test]
    fn intercepts_are_block_means() {
        let y0 = DMatrix::from_element(2, 2, 1.0);
        let b = Blocks::from_parts(
            DVector::from_vec(vec![2.0, 4.0]),
            y0,
            DVector::from_vec(vec![1.0, 5.0]),
        )
        .unwrap();
        let cb = twice_center(&b);
        assert_abs_diff_eq!(cb.time_intercept, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(cb.unit_intercept, 3.0, epsilon = 1e-12);
    }
}
