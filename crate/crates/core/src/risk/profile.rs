use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conditional::{conditional_multi_with, MeanSign, ObservationKind, ObservationSet};
use super::measures::{risk_from_conditional, RiskValue};
use super::range::risk_range;
use crate::covariance::DistanceLaw;
use crate::error::{Error, Result};
use crate::params::RiskSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub pair: usize,
    pub observed: bool,
    pub risk: RiskValue,
    /// Conditional mean and standard deviation, when the conditional law is
    /// Gaussian.
    pub mu_tilde: Option<f64>,
    pub sigma_tilde: Option<f64>,
}

/// Risk of every pair given a set of observations. Observed pairs carry
/// `Zero`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskProfile {
    pub entries: Vec<ProfileEntry>,
}

impl RiskProfile {
    pub fn values(&self) -> Vec<RiskValue> {
        self.entries.iter().map(|e| e.risk).collect()
    }

    pub fn get(&self, pair: usize) -> Option<&ProfileEntry> {
        self.entries.iter().find(|e| e.pair == pair)
    }

    /// The profile with the given pair removed.
    pub fn without(&self, pair: usize) -> RiskProfile {
        RiskProfile {
            entries: self.entries.iter().filter(|e| e.pair != pair).copied().collect(),
        }
    }

    /// Columns `pair,state,delta,mu_tilde,sigma_tilde`; absent values are empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("pair,state,delta,mu_tilde,sigma_tilde\n");
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for e in &self.entries {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                e.pair,
                e.risk.state(),
                opt(e.risk.delta()),
                opt(e.mu_tilde),
                opt(e.sigma_tilde)
            );
        }
        out
    }
}

pub fn risk_profile(law: &DistanceLaw, obs: &ObservationSet, spec: &RiskSpec) -> Result<RiskProfile> {
    risk_profile_with(law, obs, spec, MeanSign::Standard)
}

/// Evaluates the risk of every unobserved pair.
///
/// Supports any number of exact observations, or a single range
/// observation. Mixing the two kinds is rejected.
pub fn risk_profile_with(law: &DistanceLaw, obs: &ObservationSet, spec: &RiskSpec, sign: MeanSign) -> Result<RiskProfile> {
    spec.validate()?;
    obs.check_against(law, None)?;
    let range = if obs.all_exact() {
        None
    } else {
        match obs.entries() {
            [o] => match o.kind {
                ObservationKind::Range(delta) => Some((o.pair, delta)),
                ObservationKind::Exact(_) => unreachable!(),
            },
            _ => {
                return Err(Error::param(
                    "profiles support exact observations or a single range observation, not a mix",
                ))
            }
        }
    };
    let entries = (1..=law.n_pairs())
        .into_par_iter()
        .map(|j| {
            if obs.contains(j) {
                return Ok(ProfileEntry {
                    pair: j,
                    observed: true,
                    risk: RiskValue::Zero,
                    mu_tilde: None,
                    sigma_tilde: None,
                });
            }
            match range {
                Some((i, delta)) => Ok(ProfileEntry {
                    pair: j,
                    observed: false,
                    risk: risk_range(law, i, j, delta, spec)?,
                    mu_tilde: None,
                    sigma_tilde: None,
                }),
                None => {
                    let cg = conditional_multi_with(law, obs, j, sign)?;
                    Ok(ProfileEntry {
                        pair: j,
                        observed: false,
                        risk: risk_from_conditional(&cg, spec)?,
                        mu_tilde: Some(cg.mean),
                        sigma_tilde: Some(cg.std),
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RiskProfile { entries })
}
