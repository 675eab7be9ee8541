use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::measures::{risk_from_conditional, ConditionalGaussian, RiskValue};
use crate::covariance::DistanceLaw;
use crate::eigen::jacobi_eigen;
use crate::error::{Error, Result};
use crate::params::RiskSpec;

const MAX_CONDITION: f64 = 1e12;
const RHO_LIMIT: f64 = 1.0 - 1e-12;

/// Sign in front of the regression term of the conditional mean.
///
/// `Standard` is ordinary Gaussian conditioning,
/// `r + S12 S22^{-1} (d* - r)`. `Printed` flips it to
/// `r - S12 S22^{-1} (d* - r)`, which some published closed forms use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanSign {
    #[default]
    Standard,
    Printed,
}

impl MeanSign {
    pub(crate) fn factor(self) -> f64 {
        match self {
            MeanSign::Standard => 1.0,
            MeanSign::Printed => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservationKind {
    /// The pair was measured at distance `d*` (m).
    Exact(f64),
    /// The pair is known to lie in the level set `C_delta`, i.e. below
    /// `r / (delta + c)`.
    Range(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservationJson", into = "ObservationJson")]
pub struct Observation {
    /// 1-based pair index.
    pub pair: usize,
    pub kind: ObservationKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ObservationJson {
    pair: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exact: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    range: Option<f64>,
}

impl TryFrom<ObservationJson> for Observation {
    type Error = Error;

    fn try_from(j: ObservationJson) -> Result<Self> {
        let kind = match (j.exact, j.range) {
            (Some(d), None) => ObservationKind::Exact(d),
            (None, Some(delta)) => ObservationKind::Range(delta),
            _ => {
                return Err(Error::param(format!(
                    "observation of pair {} needs exactly one of `exact` or `range`",
                    j.pair
                )))
            }
        };
        Observation::new(j.pair, kind)
    }
}

impl From<Observation> for ObservationJson {
    fn from(o: Observation) -> Self {
        let (exact, range) = match o.kind {
            ObservationKind::Exact(d) => (Some(d), None),
            ObservationKind::Range(delta) => (None, Some(delta)),
        };
        ObservationJson {
            pair: o.pair,
            exact,
            range,
        }
    }
}

impl Observation {
    pub fn new(pair: usize, kind: ObservationKind) -> Result<Self> {
        if pair < 1 {
            return Err(Error::param("pair indices are 1-based"));
        }
        match kind {
            ObservationKind::Exact(d) if !(d.is_finite() && d >= 0.0) => {
                Err(Error::param(format!("observed distance {d} at pair {pair} must be >= 0")))
            }
            ObservationKind::Range(delta) if !(delta.is_finite() && delta >= 0.0) => {
                Err(Error::param(format!("range parameter {delta} at pair {pair} must be >= 0")))
            }
            _ => Ok(Observation { pair, kind }),
        }
    }

    pub fn exact(pair: usize, d_star: f64) -> Result<Self> {
        Self::new(pair, ObservationKind::Exact(d_star))
    }

    pub fn range(pair: usize, delta: f64) -> Result<Self> {
        Self::new(pair, ObservationKind::Range(delta))
    }
}

/// Observations on distinct pairs.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<Observation>", into = "Vec<Observation>")]
pub struct ObservationSet {
    entries: Vec<Observation>,
}

impl TryFrom<Vec<Observation>> for ObservationSet {
    type Error = Error;

    fn try_from(v: Vec<Observation>) -> Result<Self> {
        ObservationSet::new(v)
    }
}

impl From<ObservationSet> for Vec<Observation> {
    fn from(s: ObservationSet) -> Self {
        s.entries
    }
}

impl ObservationSet {
    pub fn new(entries: Vec<Observation>) -> Result<Self> {
        let mut seen: Vec<usize> = entries.iter().map(|o| o.pair).collect();
        seen.sort_unstable();
        if let Some(w) = seen.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::param(format!("pair {} observed more than once", w[0])));
        }
        Ok(ObservationSet { entries })
    }

    pub fn empty() -> Self {
        ObservationSet::default()
    }

    /// All pairs observed at the same exact distance, e.g. `0` for collisions.
    pub fn exact_all(pairs: &[usize], d_star: f64) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&p| Observation::exact(p, d_star))
                .collect::<Result<_>>()?,
        )
    }

    pub fn entries(&self) -> &[Observation] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn pairs(&self) -> Vec<usize> {
        self.entries.iter().map(|o| o.pair).collect()
    }

    pub fn contains(&self, pair: usize) -> bool {
        self.entries.iter().any(|o| o.pair == pair)
    }

    pub fn all_exact(&self) -> bool {
        self.entries.iter().all(|o| matches!(o.kind, ObservationKind::Exact(_)))
    }

    pub(crate) fn check_against(&self, law: &DistanceLaw, target: Option<usize>) -> Result<()> {
        for o in &self.entries {
            law.validate_pair(o.pair)?;
        }
        if self.len() >= law.n_pairs() {
            return Err(Error::param(format!(
                "{} observations leave no unobserved pair among {}",
                self.len(),
                law.n_pairs()
            )));
        }
        if let Some(j) = target {
            law.validate_pair(j)?;
            if self.contains(j) {
                return Err(Error::param(format!("target pair {j} is itself observed")));
            }
        }
        Ok(())
    }
}

/// Law of `d_j` given `d_i = d*`.
pub fn conditional_single(law: &DistanceLaw, i: usize, j: usize, d_star: f64) -> Result<ConditionalGaussian> {
    law.validate_pair(i)?;
    law.validate_pair(j)?;
    if i == j {
        return Err(Error::param(format!("observed and target pair coincide ({i})")));
    }
    if !(d_star.is_finite() && d_star >= 0.0) {
        return Err(Error::param(format!("observed distance {d_star} must be >= 0")));
    }
    let rho = law.rho(i, j)?;
    if rho.abs() >= RHO_LIMIT {
        return Err(Error::Degenerate {
            detail: format!("|rho| = {} is not below 1", rho.abs()),
            pairs: vec![i, j],
        });
    }
    let (si, sj) = (law.std_dev(i), law.std_dev(j));
    let r = law.r();
    ConditionalGaussian::new(r + rho * sj / si * (d_star - r), sj * (1.0 - rho * rho).sqrt())
}

pub fn conditional_multi(law: &DistanceLaw, obs: &ObservationSet, j: usize) -> Result<ConditionalGaussian> {
    conditional_multi_with(law, obs, j, MeanSign::Standard)
}

/// Law of `d_j` given exact observations of every pair in `obs`, by the
/// Schur complement of the observed block.
pub fn conditional_multi_with(
    law: &DistanceLaw,
    obs: &ObservationSet,
    j: usize,
    sign: MeanSign,
) -> Result<ConditionalGaussian> {
    obs.check_against(law, Some(j))?;
    let r = law.r();
    let sjj = law.sigma(j, j);
    if obs.is_empty() {
        return ConditionalGaussian::new(r, sjj.sqrt());
    }
    let mut d = Vec::with_capacity(obs.len());
    for o in obs.entries() {
        match o.kind {
            ObservationKind::Exact(x) => d.push(x),
            ObservationKind::Range(_) => {
                return Err(Error::param(format!(
                    "pair {} has a range observation; multi-pair conditioning needs exact distances",
                    o.pair
                )))
            }
        }
    }
    let pairs = obs.pairs();
    let m = pairs.len();
    let s22 = DMatrix::from_fn(m, m, |a, b| law.sigma(pairs[a], pairs[b]));
    let s12 = DVector::from_fn(m, |a, _| law.sigma(j, pairs[a]));

    let eig = jacobi_eigen(&s22)?;
    let (lo, hi) = (eig.values[0], eig.values[m - 1]);
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    log::debug!("observed block condition number {cond:e}");
    if cond > MAX_CONDITION {
        let v = eig.vectors.column(0);
        let vmax = v.amax();
        let dependent: Vec<usize> = (0..m).filter(|&a| v[a].abs() > 1e-6 * vmax).map(|a| pairs[a]).collect();
        return Err(Error::Degenerate {
            detail: format!("observed covariance block has condition number {cond:e}"),
            pairs: dependent,
        });
    }
    let chol = s22
        .cholesky()
        .ok_or_else(|| Error::Numeric("observed covariance block is not positive definite".into()))?;
    let resid = DVector::from_fn(m, |a, _| d[a] - r);
    let shift = s12.dot(&chol.solve(&resid));
    let reduction = s12.dot(&chol.solve(&s12));
    let var = sjj - reduction;
    if !(var > 0.0) {
        let mut all = pairs.clone();
        all.push(j);
        return Err(Error::Degenerate {
            detail: format!("conditional variance {var:e} is not positive"),
            pairs: all,
        });
    }
    ConditionalGaussian::new(r + sign.factor() * shift, var.sqrt())
}

pub fn risk_single(law: &DistanceLaw, i: usize, j: usize, d_star: f64, spec: &RiskSpec) -> Result<RiskValue> {
    risk_from_conditional(&conditional_single(law, i, j, d_star)?, spec)
}

pub fn risk_multi(law: &DistanceLaw, obs: &ObservationSet, j: usize, spec: &RiskSpec) -> Result<RiskValue> {
    risk_multi_with(law, obs, j, spec, MeanSign::Standard)
}

pub fn risk_multi_with(
    law: &DistanceLaw,
    obs: &ObservationSet,
    j: usize,
    spec: &RiskSpec,
    sign: MeanSign,
) -> Result<RiskValue> {
    risk_from_conditional(&conditional_multi_with(law, obs, j, sign)?, spec)
}
