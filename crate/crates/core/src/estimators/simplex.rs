//! Simplex-constrained regression via accelerated projected gradient.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::panel::Blocks;

use super::lasso::direction_problem;
use super::{Direction, FitResult, Method, SolverConfig};

/// Euclidean projection onto {w : w ≥ 0, Σw = 1}, sort-based and exact.
pub fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len();
    let mut sorted: Vec<f64> = v.iter().cloned().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        cumsum += x;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if x - candidate > 0.0 {
            theta = candidate;
        }
    }
    DVector::from_fn(n, |i, _| (v[i] - theta).max(0.0))
}

/// Largest eigenvalue of AᵀA by power iteration (deterministic start).
fn gram_spectral_norm(design: &DMatrix<f64>) -> f64 {
    let p = design.ncols();
    let mut x = DVector::from_element(p, 1.0 / (p as f64).sqrt());
    let mut lam = 0.0;
    for _ in 0..200 {
        let y = design.transpose() * (design * &x);
        let norm = y.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = y / norm;
        let new_lam = (design * &next).norm_squared();
        if (new_lam - lam).abs() <= 1e-12 * (1.0 + new_lam) {
            return new_lam;
        }
        lam = new_lam;
        x = next;
    }
    lam
}

/// Minimize ‖b − Aw‖² + λ‖w‖² over the probability simplex by accelerated
/// projected gradient with step 1/L. An accelerated step that would raise
/// the objective is replaced by a plain projected-gradient step from the
/// current iterate (which cannot raise it) and the momentum is restarted,
/// so the iterate objective is non-increasing. Converged when the
/// fixed-point residual ‖w − Π(w − ∇f(w))‖∞ drops below `cfg.tol`, which
/// bounds both the stationarity and complementary-slackness violations.
fn simplex_solve(
    design: &DMatrix<f64>,
    target: &DVector<f64>,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<DVector<f64>> {
    let p = design.ncols();
    if p == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let lipschitz = 2.0 * (gram_spectral_norm(design) + lambda);
    let step = if lipschitz > 0.0 { 1.0 / lipschitz } else { 1.0 };
    let grad = |w: &DVector<f64>| -> DVector<f64> {
        2.0 * (design.transpose() * (design * w - target) + lambda * w)
    };
    let objective = |w: &DVector<f64>| -> f64 {
        (design * w - target).norm_squared() + lambda * w.norm_squared()
    };

    let mut w = DVector::from_element(p, 1.0 / p as f64);
    let mut y = w.clone();
    let mut t = 1.0f64;
    let mut obj = objective(&w);
    for _ in 0..cfg.max_iters {
        let g = grad(&w);
        let residual = (&w - project_simplex(&(&w - &g))).amax();
        if residual < cfg.tol {
            return Ok(w);
        }

        let z = project_simplex(&(&y - step * grad(&y)));
        let obj_z = objective(&z);
        let (w_next, obj_next) = if obj_z <= obj {
            (z, obj_z)
        } else {
            // momentum overshot: fall back to the guaranteed-descent step
            t = 1.0;
            let fallback = project_simplex(&(&w - step * &g));
            let obj_fb = objective(&fallback);
            (fallback, obj_fb)
        };
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        y = &w_next + ((t - 1.0) / t_next) * (&w_next - &w);
        t = t_next;
        w = w_next;
        obj = obj_next;
    }
    Err(Error::NotConverged(cfg.max_iters))
}

/// Classical synthetic-control weighting with a vanishing ℓ2 penalty.
pub fn fit_simplex(
    blocks: &Blocks,
    direction: Direction,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<FitResult> {
    if lambda < 0.0 {
        return Err(Error::NonPositiveLambda(lambda));
    }
    let (design, target) = direction_problem(blocks, direction);
    let w = simplex_solve(&design, &target, lambda, cfg)?;
    let (alpha_hat, beta_hat, point_hz, point_vt) = match direction {
        Direction::Hz => {
            let point = blocks.y_n.dot(&w);
            (Some(w), None, Some(point), None)
        }
        Direction::Vt => {
            let point = blocks.y_t.dot(&w);
            (None, Some(w), None, Some(point))
        }
    };
    Ok(FitResult {
        alpha_hat,
        beta_hat,
        point_hz,
        point_vt,
        method: Method::Simplex { lambda, direction },
        intercepts: None,
    })
}
