//! Value-at-risk measures of conditional distances and the three-state
//! cascading-collision risk built on them.

mod complete;
mod conditional;
mod measures;
mod profile;
mod range;

pub use complete::{classify_complete, complete_graph_risk, complete_moments, CompleteCase};
pub use conditional::{
    conditional_multi, conditional_multi_with, conditional_single, risk_multi, risk_multi_with, risk_single,
    MeanSign, Observation, ObservationKind, ObservationSet,
};
pub use measures::{
    gaussian_avar, gaussian_var, iota, kappa, levelset_risk, risk_from_conditional, var_risk, ConditionalGaussian,
    RiskValue,
};
pub use profile::{risk_profile, risk_profile_with, ProfileEntry, RiskProfile};
pub use range::{range_conditional_cdf, range_tail, risk_range, RangeTail};
