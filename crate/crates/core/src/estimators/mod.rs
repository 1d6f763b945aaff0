//! Point estimators: the symmetric class (min-norm OLS, PCR, ridge), the
//! asymmetric class (lasso, elastic net, simplex), intercept variants and
//! the doubly robust SDID/ASC combination.
//!
//! Penalized objectives are exactly ‖target − design·w‖² + λ₁‖w‖₁ + λ₂‖w‖²,
//! with no 1/2 factors and no sample-size normalization. Libraries differ on
//! this convention, so hyperparameters are not interchangeable with e.g.
//! scikit-learn's.

mod combine;
mod hpp;
mod intercepts;
mod lasso;
mod simplex;
mod symmetric;

pub use combine::doubly_robust_combine;
pub use hpp::hpp_alternating_ridge;
pub use intercepts::{fit_ols_naive_intercept, fit_with_intercepts};
pub use lasso::{fit_elastic_net, fit_lasso};
pub use simplex::{fit_simplex, project_simplex};
pub use symmetric::{fit_ols_minnorm, fit_pcr, fit_ridge};

use nalgebra::DVector;
use serde::Serialize;

/// Which regression is being run: HZ regresses the treated period on
/// pretreatment periods; VT regresses the treated unit on control units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Hz,
    Vt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "name")]
pub enum Method {
    OlsMinNorm,
    Pcr { k: usize },
    Ridge { lambda2: f64 },
    Lasso { lambda1: f64, direction: Direction },
    ElasticNet { lambda1: f64, lambda2: f64, direction: Direction },
    Simplex { lambda: f64, direction: Direction },
}

impl Method {
    /// Symmetric methods produce equal HZ and VT points (and both weight sets).
    pub fn is_symmetric(&self) -> bool {
        matches!(self, Method::OlsMinNorm | Method::Pcr { .. } | Method::Ridge { .. })
    }
}

/// Iterative solver controls.
#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub tol: f64,
    /// Reserved for stochastic solvers; unused by the deterministic ones here.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            tol: 1e-10,
            seed: 0,
        }
    }
}

/// Fitted intercepts for the twice-centered formulations.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Intercepts {
    pub alpha0: f64,
    pub alpha1: f64,
}

/// Output of a point-estimator fit.
#[derive(Debug, Clone)]
pub struct FitResult {
    /// HZ weights over pretreatment periods (absent for VT-only fits).
    pub alpha_hat: Option<DVector<f64>>,
    /// VT weights over control units (absent for HZ-only fits).
    pub beta_hat: Option<DVector<f64>>,
    pub point_hz: Option<f64>,
    pub point_vt: Option<f64>,
    pub method: Method,
    pub intercepts: Option<Intercepts>,
}

impl FitResult {
    /// The point estimate: HZ when present, VT otherwise.
    pub fn point(&self) -> f64 {
        self.point_hz.or(self.point_vt).unwrap_or(0.0)
    }

    pub fn alpha(&self) -> &DVector<f64> {
        self.alpha_hat.as_ref().expect("fit has no HZ weights")
    }

    pub fn beta(&self) -> &DVector<f64> {
        self.beta_hat.as_ref().expect("fit has no VT weights")
    }
}
