//! Hadamard product parametrization of the elastic net penalty.
//!
//! Writes the coefficient vector as an elementwise product of K factors and
//! minimizes ‖b − A (w_1 ∘ … ∘ w_K)‖² + (λ/K) Σ_k ‖w_k‖² by alternating
//! ridge solves, one factor at a time.  K = 1 is exactly ridge with penalty
//! λ; K = 2 reaches the lasso objective at the same λ, since the penalty
//! minimized over factorizations of a fixed product is λ‖w‖₁.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::estimators::lasso::direction_problem;
use crate::estimators::{Direction, SolverConfig};
use crate::panel::Blocks;

fn hpp_objective(design: &DMatrix<f64>, target: &DVector<f64>, factors: &[DVector<f64>], lambda: f64) -> f64 {
    let p = design.ncols();
    let mut w = DVector::from_element(p, 1.0);
    for f in factors {
        w.component_mul_assign(f);
    }
    let resid = target - design * &w;
    let penalty: f64 = factors.iter().map(|f| f.norm_squared()).sum();
    resid.norm_squared() + lambda / factors.len() as f64 * penalty
}

/// Alternating minimization over the K Hadamard factors, each step an exact
/// ridge solve in one factor with the others held fixed.  Returns the product
/// vector w = w_1 ∘ … ∘ w_K.
pub fn hpp_alternating_ridge(
    blocks: &Blocks,
    direction: Direction,
    k_factors: usize,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<DVector<f64>> {
    if k_factors == 0 {
        return Err(Error::KOutOfRange { k: 0, rank: 1 });
    }
    if !(lambda > 0.0) {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let (design, target) = direction_problem(blocks, direction);
    let p = design.ncols();
    let gram = design.transpose() * &design;
    let atb = design.transpose() * &target;
    let lam_k = lambda / k_factors as f64;

    let mut factors = vec![DVector::from_element(p, 1.0); k_factors];
    let mut prev_obj = hpp_objective(&design, &target, &factors, lambda);

    for _ in 0..cfg.max_iters {
        for k in 0..k_factors {
            // product of all factors except k
            let mut rest = DVector::from_element(p, 1.0);
            for (j, f) in factors.iter().enumerate() {
                if j != k {
                    rest.component_mul_assign(f);
                }
            }
            // (D G D + (λ/K) I) w_k = D A'b, with D = diag(rest)
            let mut system = DMatrix::zeros(p, p);
            for a in 0..p {
                for b in 0..p {
                    system[(a, b)] = rest[a] * gram[(a, b)] * rest[b];
                }
                system[(a, a)] += lam_k;
            }
            let rhs = rest.component_mul(&atb);
            let chol = Cholesky::new(system).ok_or(Error::NotConverged(cfg.max_iters))?;
            factors[k] = chol.solve(&rhs);
        }
        let obj = hpp_objective(&design, &target, &factors, lambda);
        if (prev_obj - obj).abs() < cfg.tol * (1.0 + prev_obj.abs()) {
            break;
        }
        prev_obj = obj;
    }

    let mut w = DVector::from_element(p, 1.0);
    for f in &factors {
        w.component_mul_assign(f);
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::lasso::coordinate_descent;
    use crate::estimators::symmetric::fit_ridge;
    use crate::spectral::svd_decompose;
    use approx::assert_abs_diff_eq;
    use nalgebra::{DMatrix, DVector};

    fn blocks() -> Blocks {
        let y0 = DMatrix::from_row_slice(
            5,
            4,
            &[
                1.0, 0.3, -0.2, 0.8, 0.5, 1.1, 0.4, -0.6, -0.7, 0.2, 0.9, 0.3, 0.6, -0.5, 1.3,
                0.1, 0.2, 0.7, -0.4, 1.0,
            ],
        );
        Blocks::from_parts(
            DVector::from_vec(vec![0.4, -0.2, 0.9, 0.6]),
            y0,
            DVector::from_vec(vec![1.1, 0.3, -0.5, 0.8, 0.2]),
        )
        .unwrap()
    }

    #[test]
    fn single_factor_is_exact_ridge() {
        let b = blocks();
        let lambda = 0.7;
        let w = hpp_alternating_ridge(&b, Direction::Hz, 1, lambda, &SolverConfig::default()).unwrap();
        let cache = svd_decompose(&b.y0, 1e-10).unwrap();
        let ridge = fit_ridge(&b, &cache, lambda).unwrap();
        let alpha = ridge.alpha();
        for j in 0..w.len() {
            assert_abs_diff_eq!(w[j], alpha[j], epsilon = 1e-8);
        }
    }

    #[test]
    fn two_factors_match_lasso_objective() {
        // With K = 2 the penalty minimized over factorizations of a fixed
        // product is λ‖w‖₁, so the optimal value matches the lasso at λ1 = λ.
        // Near-orthogonal design, sparse truth well above the threshold.
        let y0 = DMatrix::from_row_slice(
            6,
            4,
            &[
                2.0, 0.0, 0.0, 0.1, 0.0, 2.0, 0.1, 0.0, 0.0, 0.1, 2.0, 0.0, 0.1, 0.0, 0.0, 2.0,
                0.0, 0.0, 0.1, 0.0, 0.1, 0.0, 0.0, 0.0,
            ],
        );
        let w_true = DVector::from_vec(vec![3.0, 0.0, -2.0, 0.0]);
        let y_t = &y0 * &w_true;
        let b = Blocks::from_parts(DVector::zeros(4), y0, y_t).unwrap();

        let lambda = 0.4;
        let cfg = SolverConfig {
            max_iters: 200_000,
            tol: 1e-13,
            ..SolverConfig::default()
        };
        let w = hpp_alternating_ridge(&b, Direction::Hz, 2, lambda, &cfg).unwrap();
        let (design, target) = direction_problem(&b, Direction::Hz);
        let hpp_obj = (&target - &design * &w).norm_squared()
            + lambda * w.iter().map(|x| x.abs()).sum::<f64>();

        let (w_lasso, _) = coordinate_descent(&design, &target, lambda, 0.0, &cfg).unwrap();
        let lasso_obj = (&target - &design * &w_lasso).norm_squared()
            + lambda * w_lasso.iter().map(|x| x.abs()).sum::<f64>();
        assert!((hpp_obj - lasso_obj).abs() < 1e-4, "hpp {hpp_obj} vs lasso {lasso_obj}");
    }

    #[test]
    fn zero_target_gives_zero_product() {
        let b0 = blocks();
        let b = Blocks::from_parts(b0.y_n.clone(), b0.y0.clone(), DVector::zeros(5)).unwrap();
        let w = hpp_alternating_ridge(&b, Direction::Hz, 3, 1.0, &SolverConfig::default()).unwrap();
        assert!(w.norm() < 1e-8);
    }

    #[test]
    fn bad_arguments_rejected() {
        let b = blocks();
        assert!(hpp_alternating_ridge(&b, Direction::Hz, 0, 1.0, &SolverConfig::default()).is_err());
        assert!(hpp_alternating_ridge(&b, Direction::Hz, 2, 0.0, &SolverConfig::default()).is_err());
    }
}
