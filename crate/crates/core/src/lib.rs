//! Panel-data counterfactual estimation: HZ/VT regressions, their spectral
//! equivalences, model-based variance estimation under time, unit and mixed
//! randomness, design-based placebo estimands, and a Monte Carlo coverage
//! harness over the bundled case-study panels.

pub mod center;
pub mod design;
pub mod error;
pub mod estimators;
pub mod inference;
pub mod panel;
pub mod sim;
pub mod spectral;

pub use error::{Error, Result, Side};
pub use panel::{Blocks, PanelData, PanelSchema};
