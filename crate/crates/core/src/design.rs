//! Design-based estimands: per-cell placebo fits and their averages under
//! random assignment of the treated time, unit, or both.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimators::{fit_ols_minnorm, fit_pcr, Method};
use crate::panel::{Blocks, PanelData};
use crate::spectral::{svd_decompose, DEFAULT_RTOL};

/// Per-cell fitted control outcomes Y*_it(0). First-period cells have an
/// empty pretreatment history, so they are masked invalid rather than
/// assigned a fallback value.
#[derive(Debug, Clone)]
pub struct PlaceboGrid {
    /// N×T fitted values; meaningful only where `valid` is true.
    pub fitted: DMatrix<f64>,
    pub valid: DMatrix<bool>,
}

/// Source of randomness for the design-based estimand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomSource {
    Time,
    Unit,
    Both,
}

/// Fit every placebo cell: unit i is relabeled treated at period t, the
/// blocks use the other units' history (y0), unit i's own history (y_n) and
/// the other units at t (y_t), and the symmetric estimator supplies the fit.
/// Only the symmetric fits are defined cell-wise; PCR truncates each cell's
/// design at min(k, cell rank).
pub fn placebo_fit_grid(panel: &PanelData, method: Method) -> Result<PlaceboGrid> {
    let k_req = match method {
        Method::OlsMinNorm => None,
        Method::Pcr { k } => Some(k),
        _ => return Err(Error::UnsupportedMethod),
    };
    let (n, t) = panel.outcomes.shape();
    let mut fitted = DMatrix::zeros(n, t);
    let mut valid = DMatrix::from_element(n, t, false);
    for i in 0..n {
        let donor_rows: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        for period in 1..t {
            let cols: Vec<usize> = (0..period).collect();
            let y0 = panel.outcomes.select_rows(donor_rows.iter()).select_columns(cols.iter());
            let y_n = panel.outcomes.row(i).columns(0, period).transpose();
            let y_t = panel
                .outcomes
                .select_rows(donor_rows.iter())
                .column(period)
                .into_owned();
            let blocks = Blocks::from_parts(y_n, y0, y_t)?;
            let cache = svd_decompose(&blocks.y0, DEFAULT_RTOL)?;
            let fit = match k_req {
                None => fit_ols_minnorm(&blocks, &cache),
                Some(k) => {
                    let k_eff = k.min(cache.rank).max(1);
                    if cache.rank == 0 {
                        fit_ols_minnorm(&blocks, &cache)
                    } else {
                        fit_pcr(&blocks, &cache, k_eff)?
                    }
                }
            };
            fitted[(i, period)] = fit.point();
            valid[(i, period)] = true;
        }
    }
    Ok(PlaceboGrid { fitted, valid })
}

/// Average of the placebo grid matching the assumed assignment mechanism:
/// Time averages the treated unit's row over valid periods, Unit averages
/// the treated period's column over units, Both takes the grand average
/// over all valid cells.
pub fn design_estimand(
    grid: &PlaceboGrid,
    source: RandomSource,
    treated_unit: usize,
    treated_period: usize,
) -> Result<f64> {
    let (n, t) = grid.fitted.shape();
    let cells: Vec<(usize, usize)> = match source {
        RandomSource::Time => (0..t).map(|tt| (treated_unit, tt)).collect(),
        RandomSource::Unit => (0..n).map(|i| (i, treated_period)).collect(),
        RandomSource::Both => (0..n).flat_map(|i| (0..t).map(move |tt| (i, tt))).collect(),
    };
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, tt) in cells {
        if grid.valid[(i, tt)] {
            sum += grid.fitted[(i, tt)];
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyAverage);
    }
    Ok(sum / count as f64)
}
