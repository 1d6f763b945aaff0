//! Panel data model and block extraction.
//!
//! An N×T outcome matrix with unit and time labels, a single treated unit
//! (relabeled to the last row at load time) and `t0` pretreatment periods.

use std::collections::BTreeMap;
use std::io::Read;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Column names for long-format panel input.
#[derive(Debug, Clone)]
pub struct PanelSchema {
    pub unit_col: String,
    pub time_col: String,
    pub value_col: String,
}

impl Default for PanelSchema {
    fn default() -> Self {
        Self {
            unit_col: "unit".into(),
            time_col: "time".into(),
            value_col: "value".into(),
        }
    }
}

/// Observed outcome panel: units × time, treated unit last.
#[derive(Debug, Clone)]
pub struct PanelData {
    /// N×T outcomes; row `N-1` is the treated unit.
    pub outcomes: DMatrix<f64>,
    pub unit_labels: Vec<String>,
    pub time_labels: Vec<String>,
    /// Row index of the treated unit (always `N-1` after loading).
    pub treated_unit: usize,
    /// Number of pretreatment periods.
    pub t0: usize,
    /// Label of the treated unit as given in the source data.
    pub treated_label: String,
}

impl PanelData {
    /// Build a panel from an outcome matrix, relabeling the treated unit to the last row.
    pub fn new(
        mut outcomes: DMatrix<f64>,
        mut unit_labels: Vec<String>,
        time_labels: Vec<String>,
        treated_unit: usize,
        t0: usize,
    ) -> Result<Self> {
        let (n, t) = outcomes.shape();
        if n < 2 {
            return Err(Error::Parse("panel needs at least 2 units".into()));
        }
        if unit_labels.len() != n || time_labels.len() != t {
            return Err(Error::DimensionMismatch(format!(
                "labels ({}, {}) do not match outcomes {}x{}",
                unit_labels.len(),
                time_labels.len(),
                n,
                t
            )));
        }
        if treated_unit >= n {
            return Err(Error::UnknownTreatedUnit(format!("row {treated_unit}")));
        }
        if t0 == 0 || t0 >= t {
            return Err(Error::T0OutOfRange { t0, t });
        }
        if outcomes.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        // Move the treated unit to the last row so all formulas use the
        // "unit N is treated" indexing convention.
        if treated_unit != n - 1 {
            outcomes.swap_rows(treated_unit, n - 1);
            unit_labels.swap(treated_unit, n - 1);
            // Keep control rows in original order below the swap point.
            // A single swap suffices for the math; labels track the rows.
        }
        let treated_label = unit_labels[n - 1].clone();
        Ok(Self {
            outcomes,
            unit_labels,
            time_labels,
            treated_unit: n - 1,
            t0,
            treated_label,
        })
    }

    pub fn n_units(&self) -> usize {
        self.outcomes.nrows()
    }

    pub fn n_periods(&self) -> usize {
        self.outcomes.ncols()
    }

    pub fn n_controls(&self) -> usize {
        self.n_units() - 1
    }

    pub fn n_post_periods(&self) -> usize {
        self.n_periods() - self.t0
    }
}

/// The (y_N, Y0, y_T) decomposition for the treated unit and one post-treatment period.
#[derive(Debug, Clone)]
pub struct Blocks {
    /// Treated unit's pretreatment outcomes, length T0.
    pub y_n: DVector<f64>,
    /// Control units' pretreatment outcomes, N0×T0.
    pub y0: DMatrix<f64>,
    /// Control units' outcomes at `period_index`, length N0.
    pub y_t: DVector<f64>,
    /// 0-based index into the time axis (>= t0).
    pub period_index: usize,
}

impl Blocks {
    /// Direct construction from raw pieces, for synthetic instances.
    pub fn from_parts(y_n: DVector<f64>, y0: DMatrix<f64>, y_t: DVector<f64>) -> Result<Self> {
        if y0.nrows() != y_t.len() || y0.ncols() != y_n.len() {
            return Err(Error::DimensionMismatch(format!(
                "y0 is {}x{} but y_t has {} and y_n has {} entries",
                y0.nrows(),
                y0.ncols(),
                y_t.len(),
                y_n.len()
            )));
        }
        Ok(Self {
            y_n,
            y0,
            y_t,
            period_index: 0,
        })
    }

    pub fn n_controls(&self) -> usize {
        self.y0.nrows()
    }

    pub fn n_pre_periods(&self) -> usize {
        self.y0.ncols()
    }
}

/// Extract the estimation blocks for one post-treatment period.
pub fn split_blocks(panel: &PanelData, period: usize) -> Result<Blocks> {
    if period < panel.t0 || period >= panel.n_periods() {
        return Err(Error::PeriodBeforeTreatment {
            period,
            t0: panel.t0,
        });
    }
    let n0 = panel.n_controls();
    let t0 = panel.t0;
    let y_n = DVector::from_fn(t0, |t, _| panel.outcomes[(n0, t)]);
    let y0 = DMatrix::from_fn(n0, t0, |i, t| panel.outcomes[(i, t)]);
    let y_t = DVector::from_fn(n0, |i, _| panel.outcomes[(i, period)]);
    Ok(Blocks {
        y_n,
        y0,
        y_t,
        period_index: period,
    })
}

/// Load a long-format (unit, time, value) panel from delimited text.
///
/// Times are sorted ascending (numerically when every label parses as a
/// number, lexicographically otherwise); the treated unit becomes the last
/// row. Every (unit, time) pair must appear exactly once.
pub fn load_panel<R: Read>(
    reader: R,
    schema: &PanelSchema,
    treated: &str,
    t0: usize,
) -> Result<PanelData> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Parse(format!("column {name:?} not found in header")))
    };
    let ucol = col(&schema.unit_col)?;
    let tcol = col(&schema.time_col)?;
    let vcol = col(&schema.value_col)?;

    let mut cells: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut units: Vec<String> = Vec::new();
    let mut times: Vec<String> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let unit = record
            .get(ucol)
            .ok_or_else(|| Error::Parse("short record".into()))?
            .to_string();
        let time = record
            .get(tcol)
            .ok_or_else(|| Error::Parse("short record".into()))?
            .to_string();
        let value: f64 = record
            .get(vcol)
            .ok_or_else(|| Error::Parse("short record".into()))?
            .trim()
            .parse()
            .map_err(|e| Error::Parse(format!("bad value for ({unit}, {time}): {e}")))?;
        if !units.contains(&unit) {
            units.push(unit.clone());
        }
        if !times.contains(&time) {
            times.push(time.clone());
        }
        if cells.insert((unit.clone(), time.clone()), value).is_some() {
            return Err(Error::DuplicateCell { unit, time });
        }
    }
    if units.is_empty() {
        return Err(Error::Parse("empty input".into()));
    }

    sort_time_labels(&mut times);
    let treated_idx = units
        .iter()
        .position(|u| u == treated)
        .ok_or_else(|| Error::UnknownTreatedUnit(treated.to_string()))?;

    let n = units.len();
    let t = times.len();
    let mut outcomes = DMatrix::zeros(n, t);
    for (i, unit) in units.iter().enumerate() {
        for (j, time) in times.iter().enumerate() {
            match cells.get(&(unit.clone(), time.clone())) {
                Some(v) => outcomes[(i, j)] = *v,
                None => {
                    return Err(Error::MissingCell {
                        unit: unit.clone(),
                        time: time.clone(),
                    })
                }
            }
        }
    }
    PanelData::new(outcomes, units, times, treated_idx, t0)
}

/// Numeric sort when every label parses as a number, lexicographic otherwise.
fn sort_time_labels(times: &mut [String]) {
    let numeric: Option<Vec<f64>> = times.iter().map(|s| s.trim().parse().ok()).collect();
    match numeric {
        Some(vals) => {
            let mut idx: Vec<usize> = (0..times.len()).collect();
            idx.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
            let sorted: Vec<String> = idx.iter().map(|&i| times[i].clone()).collect();
            times.clone_from_slice(&sorted);
        }
        None => times.sort(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_csv() -> &'static str {
        "unit,time,value\na,1,1.0\na,2,2.0\nb,1,3.0\nb,2,4.0\n"
    }

    #[test]
    fn loads_toy_panel() {
        let p = load_panel(toy_csv().as_bytes(), &PanelSchema::default(), "a", 1).unwrap();
        assert_eq!(p.n_units(), 2);
        assert_eq!(p.n_periods(), 2);
        // treated unit relabeled to the last row
        assert_eq!(p.unit_labels[1], "a");
        assert_eq!(p.outcomes[(1, 0)], 1.0);
        assert_eq!(p.outcomes[(0, 1)], 4.0);
    }

    #[test]
    fn duplicate_cell_rejected() {
        let csv = "unit,time,value\na,1,1.0\na,1,2.0\nb,1,3.0\n";
        let err = load_panel(csv.as_bytes(), &PanelSchema::default(), "a", 1).unwrap_err();
        assert!(matches!(err, Error::DuplicateCell { .. }));
    }

    #[test]
    fn missing_cell_rejected() {
        let csv = "unit,time,value\na,1,1.0\na,2,2.0\nb,1,3.0\n";
        let err = load_panel(csv.as_bytes(), &PanelSchema::default(), "a", 1).unwrap_err();
        assert!(matches!(err, Error::MissingCell { .. }));
    }

    #[test]
    fn unknown_treated_rejected() {
        let err = load_panel(toy_csv().as_bytes(), &PanelSchema::default(), "z", 1).unwrap_err();
        assert!(matches!(err, Error::UnknownTreatedUnit(_)));
    }

    #[test]
    fn t0_out_of_range_rejected() {
        let err = load_panel(toy_csv().as_bytes(), &PanelSchema::default(), "a", 2).unwrap_err();
        assert!(matches!(err, Error::T0OutOfRange { .. }));
    }

    #[test]
    fn split_blocks_shapes() {
        let p = load_panel(toy_csv().as_bytes(), &PanelSchema::default(), "a", 1).unwrap();
        let b = split_blocks(&p, 1).unwrap();
        assert_eq!(b.y_n.len(), 1);
        assert_eq!(b.y0.shape(), (1, 1));
        assert_eq!(b.y_t.len(), 1);
        assert!(matches!(
            split_blocks(&p, 0).unwrap_err(),
            Error::PeriodBeforeTreatment { .. }
        ));
    }

    #[test]
    fn numeric_time_sort() {
        let csv = "unit,time,value\na,10,1.0\na,2,2.0\nb,10,3.0\nb,2,4.0\n";
        let p = load_panel(csv.as_bytes(), &PanelSchema::default(), "a", 1).unwrap();
        assert_eq!(p.time_labels, vec!["2", "10"]);
    }
}
