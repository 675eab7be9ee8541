//! Membership in the delay stability region `S` and its compact subset `S̄`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Spectrum;
use crate::roots::bisect;

/// Lower and upper `s2` limits of `S̄`, and the margin taken off `s1`.
pub const SBAR_S2_MIN: f64 = 0.1;
pub const SBAR_S2_MAX: f64 = 0.9;
pub const SBAR_S1_MIN: f64 = 0.1;
const SBAR_S1_MARGIN: f64 = 0.1;

/// Solves `a sin(a) = s1` on `(0, pi/2)`. Requires `0 < s1 < pi/2`.
pub fn solve_a(s1: f64) -> f64 {
    bisect(|a| a * a.sin() - s1, 0.0, FRAC_PI_2)
}

/// `a cot(a)`, continuous at 0.
fn x_cot_x(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 3.0
    } else {
        x / x.tan()
    }
}

/// Largest admissible `s2` for a given `s1`: `a cot(a)` with `a sin(a) = s1`,
/// or 0 when `s1` is outside `(0, pi/2)`.
pub fn s2_limit(s1: f64) -> f64 {
    if !(s1 > 0.0 && s1 < FRAC_PI_2) {
        return 0.0;
    }
    x_cot_x(solve_a(s1))
}

/// Open stability region test for one mode.
pub fn in_stability_set(s1: f64, s2: f64) -> bool {
    if !(s1.is_finite() && s2.is_finite()) || s1 <= 0.0 || s2 <= 0.0 || s1 >= FRAC_PI_2 {
        return false;
    }
    s2 < s2_limit(s1)
}

/// Solves `s* cot(s*) = s2` on `(0, pi/2)`.
pub fn s_star(s2: f64) -> Result<f64> {
    if !(s2 > 0.0 && s2 < 1.0) {
        return Err(Error::param(format!("s2 = {s2} must lie in (0, 1)")));
    }
    Ok(bisect(|x| x_cot_x(x) - s2, 0.0, FRAC_PI_2))
}

/// Upper `s1` edge of `S̄` at `s2`: `s* sin(s*) - 0.1`.
pub fn sbar_s1_max(s2: f64) -> Result<f64> {
    if !(SBAR_S2_MIN..=SBAR_S2_MAX).contains(&s2) {
        return Err(Error::param(format!(
            "s2 = {s2} outside [{SBAR_S2_MIN}, {SBAR_S2_MAX}]"
        )));
    }
    let s = s_star(s2)?;
    Ok(s * s.sin() - SBAR_S1_MARGIN)
}

/// Closed compact subset used for the fundamental limits.
pub fn sbar_contains(s1: f64, s2: f64) -> bool {
    match sbar_s1_max(s2) {
        Ok(hi) => s1 >= SBAR_S1_MIN && s1 <= hi,
        Err(_) => false,
    }
}

/// Stability test of one Laplacian mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeCheck {
    /// 1-based mode index `k`.
    pub mode: usize,
    pub s1: f64,
    pub s2: f64,
    pub in_s: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityVerdict {
    pub stable: bool,
    /// Modes `k = 2..n`.
    pub modes: Vec<ModeCheck>,
}

impl StabilityVerdict {
    pub fn first_failing(&self) -> Option<&ModeCheck> {
        self.modes.iter().find(|m| !m.in_s)
    }

    pub fn summary(&self) -> String {
        match self.first_failing() {
            None => format!("all {} modes inside S", self.modes.len()),
            Some(m) => {
                let bad = self.modes.iter().filter(|m| !m.in_s).count();
                format!(
                    "{bad} of {} modes outside S; first is mode {} at (lambda tau, beta tau) = ({:.6}, {:.6})",
                    self.modes.len(),
                    m.mode,
                    m.s1,
                    m.s2
                )
            }
        }
    }

    /// True if every mode also lies in `S̄`.
    pub fn all_in_sbar(&self) -> bool {
        self.modes.iter().all(|m| sbar_contains(m.s1, m.s2))
    }
}

pub fn platoon_stable(spec: &Spectrum, tau: f64, beta: f64) -> StabilityVerdict {
    let s2 = beta * tau;
    let modes: Vec<ModeCheck> = spec.eigenvalues()[1..]
        .iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let s1 = lambda * tau;
            ModeCheck {
                mode: k + 2,
                s1,
                s2,
                in_s: in_stability_set(s1, s2),
            }
        })
        .collect();
    StabilityVerdict {
        stable: modes.iter().all(|m| m.in_s),
        modes,
    }
}
