//! PU-aware classifiers. All three fit only on features and `s`; `y` is
//! never read here.

mod bagging;
mod elkanoto;
mod upu;

pub use bagging::{fit_bagging_pu, member_seed, BaggingPuConfig, BaggingPuModel};
pub use elkanoto::{class_prior_from, estimate_class_prior, fit_elkanoto, ElkanotoConfig, ElkanotoModel, PriorEstimate};
pub use upu::{double_hinge, fit_upu, pn_risk, upu_risk, UpuConfig, UpuModel};

use crate::classify::PuDataset;

/// Copy of `data` with `y` dropped, so fitting code cannot observe it.
pub(crate) fn observed_only(data: &PuDataset) -> PuDataset {
    PuDataset {
        y: None,
        ..data.clone()
    }
}
