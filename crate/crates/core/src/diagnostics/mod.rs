//! Unit-root tests, residual diagnostics, information criteria and model
//! selection.

mod criteria;
mod residual;
mod selection;
mod unit_root;

pub use criteria::{info_criteria, CriteriaRow, InfoCriteria};
pub use residual::durbin_watson;
pub use selection::{
    candidates, select_model, Candidate, FittedModel, ModelFamily, SelectionConfig, SelectionRow,
};
pub use unit_root::{
    adf_critical_value, adf_test, default_adf_lag, default_pp_bandwidth, pp_critical_value,
    pp_test, DeterministicVariant, UnitRootResult, UnitRootTest,
};
