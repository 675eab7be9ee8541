//! Risk at pair `j` when pair `i` is only known to sit in a level set,
//! `d_i < d* = r / (delta* + c)`.
//!
//! Both the conditional CDF and the tail expectation reduce to one-dimensional
//! integrals over the standardised observed distance `u = (d_i - r)/sigma_i`,
//! truncated at `u* = (d* - r)/sigma_i`.

use serde::{Deserialize, Serialize};

use super::measures::{levelset_risk, RiskValue};
use crate::covariance::DistanceLaw;
use crate::error::{Error, Result};
use crate::normal::{log_std_cdf, std_cdf, std_pdf};
use crate::params::RiskSpec;
use crate::quadrature::adaptive_simpson;
use crate::roots::brent;

const RHO_LIMIT: f64 = 1.0 - 1e-12;
const QUAD_TOL: f64 = 1e-13;
const QUAD_SPLITS: usize = 64;
const MAX_EXPANSIONS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RangeTail {
    /// Upper end of the conditioning event, `r / (delta* + c)`.
    pub d_star: f64,
    /// Probability of the conditioning event.
    pub event_probability: f64,
    /// Conditional `eps`-quantile of `d_j`.
    pub quantile: f64,
    /// Conditional expectation of `d_j` below the quantile.
    pub avar: f64,
}

struct Setup {
    r: f64,
    sj: f64,
    rho: f64,
    st: f64,
    u_star: f64,
    lower: f64,
    log_norm: f64,
    /// `ln phi(u*) - ln Phi(u*)`, so the weight at `u* + v` is
    /// `exp(peak - u* v - v²/2)` without cancellation.
    peak: f64,
}

impl Setup {
    fn new(law: &DistanceLaw, i: usize, j: usize, delta: f64, c: f64) -> Result<Self> {
        law.validate_pair(i)?;
        law.validate_pair(j)?;
        if i == j {
            return Err(Error::param(format!("observed and target pair coincide ({i})")));
        }
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(Error::param(format!("range parameter {delta} must be >= 0")));
        }
        let rho = law.rho(i, j)?;
        if rho.abs() >= RHO_LIMIT {
            return Err(Error::Degenerate {
                detail: format!("|rho| = {} is not below 1", rho.abs()),
                pairs: vec![i, j],
            });
        }
        let r = law.r();
        let (si, sj) = (law.std_dev(i), law.std_dev(j));
        let d_star = r / (delta + c);
        let u_star = (d_star - r) / si;
        // weight exp(-u²/2) falls by e^-40 over [lower, u*]
        let lower = if u_star >= 0.0 {
            -9.0
        } else {
            u_star - ((u_star * u_star + 80.0).sqrt() + u_star)
        };
        let log_norm = log_std_cdf(u_star);
        Ok(Setup {
            peak: -0.5 * u_star * u_star - 0.5 * (2.0 * std::f64::consts::PI).ln() - log_norm,
            r,
            sj,
            rho,
            st: sj * (1.0 - rho * rho).sqrt(),
            u_star,
            lower,
            log_norm,
        })
    }

    fn weight(&self, v: f64) -> f64 {
        (self.peak - self.u_star * v - 0.5 * v * v).exp()
    }

    fn mu(&self, u: f64) -> f64 {
        self.r + self.rho * self.sj * u
    }

    fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> Result<f64> {
        let est = adaptive_simpson(
            &|v| self.weight(v) * f(self.u_star + v),
            self.lower - self.u_star,
            0.0,
            QUAD_TOL,
            QUAD_SPLITS,
        );
        if !est.converged || !est.value.is_finite() {
            return Err(Error::Numeric(format!(
                "range integral failed on [{}, {}]",
                self.lower, self.u_star
            )));
        }
        Ok(est.value)
    }

    fn cdf(&self, z: f64) -> Result<f64> {
        self.integrate(|u| std_cdf((z - self.mu(u)) / self.st))
    }

    /// Mean of the truncated conditional, used to centre the bracket.
    fn centre(&self) -> f64 {
        self.mu(-self.peak.exp())
    }
}

/// `P(d_j < z | d_i < r/(delta* + c))`.
pub fn range_conditional_cdf(law: &DistanceLaw, i: usize, j: usize, delta: f64, c: f64, z: f64) -> Result<f64> {
    Setup::new(law, i, j, delta, c)?.cdf(z)
}

/// Conditional quantile and tail expectation of `d_j` under a range
/// observation of `d_i`.
pub fn range_tail(law: &DistanceLaw, i: usize, j: usize, delta: f64, spec: &RiskSpec) -> Result<RangeTail> {
    spec.validate()?;
    let s = Setup::new(law, i, j, delta, spec.c)?;
    let eps = spec.epsilon;
    let g = |z: f64| s.cdf(z).map(|p| p - eps);

    let step = 12.0 * s.sj;
    let centre = s.centre();
    let (mut lo, mut hi) = (centre - step, centre + step);
    let mut expansions = 0;
    while g(lo)? > 0.0 {
        lo -= step * f64::powi(2.0, expansions as i32);
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Numeric(format!("no lower bracket for the range quantile (reached {lo})")));
        }
    }
    while g(hi)? < 0.0 {
        hi += step * f64::powi(2.0, expansions as i32);
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Numeric(format!("no upper bracket for the range quantile (reached {hi})")));
        }
    }
    let mut failure = None;
    let quantile = brent(
        |z| match g(z) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        lo,
        hi,
        1e-12 * s.sj,
        200,
    )
    .map_err(|e| Error::Numeric(format!("range quantile on [{lo}, {hi}]: {e}")))?;
    if let Some(e) = failure {
        return Err(e);
    }

    let partial = s.integrate(|u| {
        let m = s.mu(u);
        let t = (quantile - m) / s.st;
        m * std_cdf(t) - s.st * std_pdf(t)
    })?;
    Ok(RangeTail {
        d_star: spec.r / (delta + spec.c),
        event_probability: s.log_norm.exp(),
        quantile,
        avar: partial / eps,
    })
}

pub fn risk_range(law: &DistanceLaw, i: usize, j: usize, delta: f64, spec: &RiskSpec) -> Result<RiskValue> {
    let tail = range_tail(law, i, j, delta, spec)?;
    Ok(levelset_risk(tail.avar, spec.r, spec.c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::risk::measures::{gaussian_avar, gaussian_var, ConditionalGaussian};
    use nalgebra::DMatrix;

    fn law(si: f64, sj: f64, rho: f64) -> DistanceLaw {
        let cov = DMatrix::from_row_slice(2, 2, &[si * si, rho * si * sj, rho * si * sj, sj * sj]);
        DistanceLaw::new(2.0, cov).unwrap()
    }

    #[test]
    fn independent_pair_gives_unconditional_avar() {
        let spec = RiskSpec { epsilon: 0.1, r: 2.0, c: 1.1 };
        let l = law(0.5, 0.7, 0.0);
        let t = range_tail(&l, 1, 2, 0.3, &spec).unwrap();
        let cg = ConditionalGaussian::new(2.0, 0.7).unwrap();
        assert!((t.quantile - gaussian_var(&cg, 0.1).unwrap()).abs() < 1e-10);
        assert!((t.avar - gaussian_avar(&cg, 0.1).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn cdf_limits() {
        let l = law(0.4, 0.6, -0.5);
        assert!(range_conditional_cdf(&l, 1, 2, 0.0, 1.0, -50.0).unwrap() < 1e-12);
        assert!((range_conditional_cdf(&l, 1, 2, 0.0, 1.0, 50.0).unwrap() - 1.0).abs() < 1e-11);
    }

    #[test]
    fn far_tail_event_is_handled() {
        // d* is hundreds of standard deviations below the mean
        let spec = RiskSpec { epsilon: 0.1, r: 2.0, c: 1.1 };
        let l = law(0.003, 0.003, -0.5);
        let t = range_tail(&l, 1, 2, 0.5, &spec).unwrap();
        assert!(t.quantile.is_finite() && t.avar.is_finite());
        // negative correlation pushes the neighbour above r
        assert!(t.avar > 2.0);
    }

    #[test]
    fn positive_correlation_raises_risk() {
        let spec = RiskSpec { epsilon: 0.1, r: 2.0, c: 1.1 };
        let base = risk_range(&law(0.5, 0.5, 0.0), 1, 2, 0.5, &spec).unwrap();
        let pos = risk_range(&law(0.5, 0.5, 0.6), 1, 2, 0.5, &spec).unwrap();
        assert!(pos > base);
    }

    #[test]
    fn rejects_bad_input() {
        let spec = RiskSpec { epsilon: 0.1, r: 2.0, c: 1.1 };
        let l = law(0.5, 0.5, 0.2);
        assert!(risk_range(&l, 1, 1, 0.5, &spec).is_err());
        assert!(risk_range(&l, 1, 2, -0.5, &spec).is_err());
    }
}
