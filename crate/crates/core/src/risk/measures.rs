use std::cmp::Ordering;
use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal::{erf_inv, erfc_inv};
use crate::params::RiskSpec;

/// `iota = erf^{-1}(2 eps - 1)`.
pub fn iota(epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    // 2 eps - 1 rounds to -1 for tiny eps, so go through erfc there
    if epsilon < 0.5 {
        Ok(-erfc_inv(2.0 * epsilon))
    } else {
        Ok(erf_inv(2.0 * epsilon - 1.0))
    }
}

/// Expected-shortfall multiplier `kappa = 1 / (sqrt(2 pi) eps exp(iota²))`.
pub fn kappa(epsilon: f64) -> Result<f64> {
    let i = iota(epsilon)?;
    Ok(1.0 / ((2.0 * PI).sqrt() * epsilon * (i * i).exp()))
}

/// Conditional normal law `N(mean, std²)` of a distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionalGaussian {
    pub mean: f64,
    pub std: f64,
}

impl ConditionalGaussian {
    pub fn new(mean: f64, std: f64) -> Result<Self> {
        if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
            return Err(Error::Degenerate {
                detail: format!("conditional standard deviation {std} is not positive"),
                pairs: Vec::new(),
            });
        }
        Ok(ConditionalGaussian { mean, std })
    }

    pub fn variance(&self) -> f64 {
        self.std * self.std
    }
}

/// Lower-tail value-at-risk `mean + sqrt(2) std iota`.
pub fn gaussian_var(cg: &ConditionalGaussian, epsilon: f64) -> Result<f64> {
    Ok(cg.mean + SQRT_2 * cg.std * iota(epsilon)?)
}

/// Lower-tail average value-at-risk `mean - kappa std`.
pub fn gaussian_avar(cg: &ConditionalGaussian, epsilon: f64) -> Result<f64> {
    Ok(cg.mean - kappa(epsilon)? * cg.std)
}

/// Three-state collision risk.
///
/// Ordered `Zero < Finite(a) < Finite(b) < Infinite` for `a < b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RiskValue {
    Zero,
    Finite(f64),
    Infinite,
}

impl RiskValue {
    pub fn state(&self) -> &'static str {
        match self {
            RiskValue::Zero => "zero",
            RiskValue::Finite(_) => "finite",
            RiskValue::Infinite => "infinite",
        }
    }

    pub fn delta(&self) -> Option<f64> {
        match self {
            RiskValue::Finite(d) => Some(*d),
            _ => None,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            RiskValue::Zero => 0,
            RiskValue::Finite(_) => 1,
            RiskValue::Infinite => 2,
        }
    }

    pub fn max(self, other: RiskValue) -> RiskValue {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl PartialOrd for RiskValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (RiskValue::Finite(a), RiskValue::Finite(b)) => a.partial_cmp(b),
            _ => Some(self.rank().cmp(&other.rank())),
        }
    }
}

impl std::fmt::Display for RiskValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RiskValue::Finite(d) => write!(f, "finite({d})"),
            other => f.write_str(other.state()),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct RiskJson {
    state: String,
    delta: Option<f64>,
}

impl Serialize for RiskValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RiskJson {
            state: self.state().to_string(),
            delta: self.delta(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RiskValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let j = RiskJson::deserialize(d)?;
        match (j.state.as_str(), j.delta) {
            ("zero", None) => Ok(RiskValue::Zero),
            ("infinite", None) => Ok(RiskValue::Infinite),
            ("finite", Some(x)) if x > 0.0 => Ok(RiskValue::Finite(x)),
            (s, d) => Err(D::Error::custom(format!("invalid risk value state {s:?} with delta {d:?}"))),
        }
    }
}

/// Largest `delta` whose level set `(-inf, r/(delta + c))` contains `avar`.
///
/// Zero when `avar >= r/c`, infinite when `avar <= 0`. The comparison with
/// `r/c` is made exactly as `r - c avar <= 0`, so every finite payload is
/// strictly positive.
pub fn levelset_risk(avar: f64, r: f64, c: f64) -> RiskValue {
    let slack = (-c).mul_add(avar, r);
    if slack <= 0.0 {
        RiskValue::Zero
    } else if avar <= 0.0 {
        RiskValue::Infinite
    } else {
        RiskValue::Finite(slack / avar)
    }
}

/// AV@R-based risk of a conditional law.
pub fn risk_from_conditional(cg: &ConditionalGaussian, spec: &RiskSpec) -> Result<RiskValue> {
    spec.validate()?;
    Ok(levelset_risk(gaussian_avar(cg, spec.epsilon)?, spec.r, spec.c))
}

/// The same level-set map applied to V@R instead of AV@R.
pub fn var_risk(cg: &ConditionalGaussian, spec: &RiskSpec) -> Result<RiskValue> {
    spec.validate()?;
    Ok(levelset_risk(gaussian_var(cg, spec.epsilon)?, spec.r, spec.c))
}
