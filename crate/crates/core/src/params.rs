use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical and design parameters of a platoon.
///
/// `g` holds one noise magnitude per vehicle. In the covariance assembly the
/// k-th entry multiplies the k-th Laplacian mode, so the formulas are exact
/// only for uniform noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatoonParams {
    pub n: usize,
    /// Communication delay (s).
    pub tau: f64,
    /// Position/velocity feedback balance (1/s).
    pub beta: f64,
    /// Target inter-vehicle distance (m).
    pub r: f64,
    /// Level-set offset, `c >= 1`.
    pub c: f64,
    /// Confidence level in (0, 1).
    pub epsilon: f64,
    pub g: Vec<f64>,
}

impl PlatoonParams {
    pub fn uniform(n: usize, tau: f64, beta: f64, r: f64, c: f64, epsilon: f64, g: f64) -> Self {
        PlatoonParams {
            n,
            tau,
            beta,
            r,
            c,
            epsilon,
            g: vec![g; n],
        }
    }

    /// The setting used throughout the case studies: `n = 20, c = 1.1, r = 2,
    /// tau = 0.04, beta = 1, epsilon = 0.1`.
    pub fn case_study(g: f64) -> Self {
        Self::uniform(20, 0.04, 1.0, 2.0, 1.1, 0.1, g)
    }

    pub fn with_n(mut self, n: usize) -> Self {
        let g0 = self.g.first().copied().unwrap_or(1.0);
        self.n = n;
        self.g = vec![g0; n];
        self
    }

    pub fn with_noise(mut self, g: Vec<f64>) -> Self {
        self.g = g;
        self
    }

    /// `g_i = (k_g sin(i) + 1) g` for `i = 1..n`.
    pub fn sinusoidal_noise(&self, g: f64, k_g: f64) -> Vec<f64> {
        (1..=self.n).map(|i| (k_g * (i as f64).sin() + 1.0) * g).collect()
    }

    pub fn uniform_noise(&self) -> Option<f64> {
        let g0 = *self.g.first()?;
        self.g.iter().all(|&g| g == g0).then_some(g0)
    }

    pub fn risk_spec(&self) -> RiskSpec {
        RiskSpec {
            epsilon: self.epsilon,
            r: self.r,
            c: self.c,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param(format!("n = {} must be at least 2", self.n)));
        }
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(Error::param(format!("tau = {} must be >= 0", self.tau)));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::param(format!("beta = {} must be > 0", self.beta)));
        }
        if self.g.len() != self.n {
            return Err(Error::param(format!(
                "noise vector has length {} but n = {}",
                self.g.len(),
                self.n
            )));
        }
        if let Some(g) = self.g.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(Error::param(format!("noise magnitude {g} must be > 0")));
        }
        self.risk_spec().validate()
    }
}

/// Risk-evaluation settings: confidence level and level-set family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskSpec {
    pub epsilon: f64,
    pub r: f64,
    pub c: f64,
}

impl RiskSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param(format!("epsilon = {} must lie in (0, 1)", self.epsilon)));
        }
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::param(format!("r = {} must be > 0", self.r)));
        }
        if !(self.c.is_finite() && self.c >= 1.0) {
            return Err(Error::param(format!("c = {} must be >= 1", self.c)));
        }
        Ok(())
    }

    /// Right end of the safe level set, `h(0) = r / c`.
    pub fn threshold(&self) -> f64 {
        self.r / self.c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_study_is_valid() {
        let p = PlatoonParams::case_study(0.1);
        p.validate().unwrap();
        assert_eq!(p.uniform_noise(), Some(0.1));
    }

    #[test]
    fn rejects_bad_noise_length() {
        let p = PlatoonParams::case_study(0.1).with_noise(vec![0.1; 3]);
        assert!(p.validate().is_err());
    }

    #[test]
    fn rejects_c_below_one() {
        let mut p = PlatoonParams::case_study(0.1);
        p.c = 0.9;
        assert!(p.validate().is_err());
    }

    #[test]
    fn sinusoidal_noise_matches_definition() {
        let p = PlatoonParams::case_study(10.0);
        let g = p.sinusoidal_noise(10.0, 0.5);
        assert_eq!(g.len(), 20);
        assert!((g[0] - (0.5 * 1f64.sin() + 1.0) * 10.0).abs() < 1e-12);
        assert!(p.with_noise(g).uniform_noise().is_none());
    }
}
