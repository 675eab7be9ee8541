//! Closed-form conditional moments on the complete graph, where the
//! distance covariance is tridiagonal with diagonal `sigma_c` and
//! neighbours `-sigma_c / 2`, and every observed pair has collided (`d* = 0`).

use serde::{Deserialize, Serialize};

use super::conditional::MeanSign;
use super::measures::{risk_from_conditional, ConditionalGaussian, RiskValue};
use crate::covariance::complete_sigma_c;
use crate::error::{Error, Result};
use crate::params::PlatoonParams;
use crate::tridiag::constant_inverse;

/// Position of the target pair relative to the collided pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "case", rename_all = "snake_case")]
pub enum CompleteCase {
    /// No collided neighbour.
    Isolated,
    /// One neighbouring run of `m` consecutive collisions.
    OneSided { m: usize },
    /// Runs of `m1` collisions below and `m2` above.
    Surrounded { m1: usize, m2: usize },
}

/// Reads the case off the collided pair set for target pair `j`.
/// Collisions not connected to `j` by a consecutive run do not matter.
pub fn classify_complete(collided: &[usize], j: usize, n_pairs: usize) -> Result<CompleteCase> {
    if j < 1 || j > n_pairs {
        return Err(Error::param(format!("target pair {j} outside 1..={n_pairs}")));
    }
    let mut hit = vec![false; n_pairs + 2];
    for &p in collided {
        if p < 1 || p > n_pairs {
            return Err(Error::param(format!("collided pair {p} outside 1..={n_pairs}")));
        }
        if hit[p] {
            return Err(Error::param(format!("pair {p} listed twice")));
        }
        hit[p] = true;
    }
    if hit[j] {
        return Err(Error::param(format!("target pair {j} is itself collided")));
    }
    let below = (1..j).rev().take_while(|&k| hit[k]).count();
    let above = (j + 1..=n_pairs).take_while(|&k| hit[k]).count();
    Ok(match (below, above) {
        (0, 0) => CompleteCase::Isolated,
        (m, 0) | (0, m) => CompleteCase::OneSided { m },
        (m1, m2) => CompleteCase::Surrounded { m1, m2 },
    })
}

fn row_sum(alpha: &nalgebra::DMatrix<f64>, row: usize) -> f64 {
    alpha.row(row).sum()
}

/// Conditional law of the target pair.
///
/// With `MeanSign::Standard` the observed runs on either side are treated
/// as separate blocks (pairs `j - 1` and `j + 1` are uncorrelated) and the
/// mean uses ordinary conditioning. `MeanSign::Printed` reproduces the
/// published formulas verbatim: a minus sign in the mean and, when both
/// sides have collided, one contiguous `(m1 + m2)`-block.
pub fn complete_moments(case: CompleteCase, sigma_c: f64, r: f64, sign: MeanSign) -> Result<ConditionalGaussian> {
    if !(sigma_c > 0.0 && sigma_c.is_finite()) {
        return Err(Error::param(format!("sigma_c = {sigma_c} must be > 0")));
    }
    let half = 0.5 * sigma_c;
    let s = sign.factor();
    match case {
        CompleteCase::Isolated => ConditionalGaussian::new(r, sigma_c.sqrt()),
        CompleteCase::OneSided { m } => {
            if m == 0 {
                return Err(Error::param("a one-sided run needs m >= 1"));
            }
            let alpha = constant_inverse(m, sigma_c);
            let var = sigma_c - half * half * alpha[(0, 0)];
            let mean = r + s * half * row_sum(&alpha, 0) * r;
            ConditionalGaussian::new(mean, var.max(0.0).sqrt())
        }
        CompleteCase::Surrounded { m1, m2 } => {
            if m1 == 0 || m2 == 0 {
                return Err(Error::param("a surrounded pair needs m1, m2 >= 1"));
            }
            match sign {
                MeanSign::Standard => {
                    let lo = constant_inverse(m1, sigma_c);
                    let hi = constant_inverse(m2, sigma_c);
                    let var = sigma_c - half * half * (lo[(m1 - 1, m1 - 1)] + hi[(0, 0)]);
                    let mean = r + half * (row_sum(&lo, m1 - 1) + row_sum(&hi, 0)) * r;
                    ConditionalGaussian::new(mean, var.max(0.0).sqrt())
                }
                MeanSign::Printed => {
                    let (a, b) = (m1 as f64, m2 as f64);
                    let var = sigma_c - half * (4.0 * a * b + a + b) / (a + b + 1.0);
                    let alpha = constant_inverse(m1 + m2, sigma_c);
                    let mean = r - half * (row_sum(&alpha, m1 - 1) + row_sum(&alpha, m1)) * r;
                    ConditionalGaussian::new(mean, var.max(0.0).sqrt())
                }
            }
        }
    }
}

/// Cascading-collision risk on the complete graph from the closed forms.
pub fn complete_graph_risk(params: &PlatoonParams, case: CompleteCase, tol: f64, sign: MeanSign) -> Result<RiskValue> {
    let sigma_c = complete_sigma_c(params, tol)?;
    let cg = complete_moments(case, sigma_c, params.r, sign)?;
    risk_from_conditional(&cg, &params.risk_spec())
}
