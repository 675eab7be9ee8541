//! Delay-induced limits that hold for every graph whose modes stay in `S̄`:
//! extremes of the kernel, covariance bounds and lower estimates of the best
//! achievable cascading risk.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::f_kernel_uncached;
use crate::params::{PlatoonParams, RiskSpec};
use crate::risk::{kappa, levelset_risk, RiskValue};
use crate::stability::{sbar_s1_max, SBAR_S1_MIN, SBAR_S2_MAX, SBAR_S2_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FBoundsConfig {
    /// Grid points per axis.
    pub grid: usize,
    /// Kernel tolerance on the grid.
    pub grid_tol: f64,
    /// Kernel tolerance during refinement.
    pub refine_tol: f64,
    /// Coordinate-wise golden-section passes.
    pub rounds: usize,
}

impl Default for FBoundsConfig {
    fn default() -> Self {
        FBoundsConfig {
            grid: 200,
            grid_tol: 1e-7,
            refine_tol: 1e-10,
            rounds: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FBounds {
    pub f_low: f64,
    pub f_high: f64,
    /// `(s1, s2)` of the minimum and maximum.
    pub argmin: (f64, f64),
    pub argmax: (f64, f64),
    pub grid_points: usize,
}

/// Maps the unit square onto `S̄`: `s2` runs over `[0.1, 0.9]` and `t` over
/// the admissible `s1` range at that `s2`, so the curved upper edge is the
/// line `t = 1`.
fn to_sbar(t: f64, s2: f64) -> Result<(f64, f64)> {
    let hi = sbar_s1_max(s2)?;
    Ok((SBAR_S1_MIN + t * (hi - SBAR_S1_MIN), s2))
}

fn eval(t: f64, s2: f64, tol: f64) -> Result<f64> {
    let (s1, s2) = to_sbar(t, s2)?;
    Ok(f_kernel_uncached(s1, s2, tol)?.value)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of `f` on `[a, b]`, also
/// considering both end points.
fn golden_min<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, xtol: f64) -> Result<(f64, f64)> {
    let (fa0, fb0) = (f(a)?, f(b)?);
    let (a0, b0) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let mut best = if fc < fd { (c, fc) } else { (d, fd) };
    for (x, fx) in [(a0, fa0), (b0, fb0)] {
        if fx < best.1 {
            best = (x, fx);
        }
    }
    Ok(best)
}

/// Coordinate-wise refinement in `(t, s2)` starting from a grid point.
/// `sign = 1` minimises, `sign = -1` maximises.
fn refine(start: (f64, f64), h: (f64, f64), cfg: &FBoundsConfig, sign: f64) -> Result<(f64, f64, f64)> {
    let (mut t, mut s2) = start;
    let mut best = sign * eval(t, s2, cfg.refine_tol)?;
    let xtol = 1e-9;
    for _ in 0..cfg.rounds {
        let (lo, hi) = ((t - h.0).max(0.0), (t + h.0).min(1.0));
        let (x, v) = golden_min(|x| Ok(sign * eval(x, s2, cfg.refine_tol)?), lo, hi, xtol)?;
        if v < best {
            best = v;
            t = x;
        }
        let (lo, hi) = ((s2 - h.1).max(SBAR_S2_MIN), (s2 + h.1).min(SBAR_S2_MAX));
        let (y, v) = golden_min(|y| Ok(sign * eval(t, y, cfg.refine_tol)?), lo, hi, xtol)?;
        if v < best {
            best = v;
            s2 = y;
        }
    }
    Ok((t, s2, sign * best))
}

/// Infimum and supremum of the kernel over `S̄` by a dense grid plus local
/// golden-section refinement.
pub fn f_bounds(cfg: &FBoundsConfig) -> Result<FBounds> {
    if cfg.grid < 2 {
        return Err(Error::param("f_bounds grid needs at least 2 points per axis"));
    }
    let g = cfg.grid;
    let step = |k: usize| k as f64 / (g - 1) as f64;
    let values: Vec<(usize, usize, f64)> = (0..g * g)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (idx / g, idx % g);
            let s2 = SBAR_S2_MIN + step(b) * (SBAR_S2_MAX - SBAR_S2_MIN);
            Ok((a, b, eval(step(a), s2, cfg.grid_tol)?))
        })
        .collect::<Result<_>>()?;
    let lo = values.iter().min_by(|x, y| x.2.total_cmp(&y.2)).copied().unwrap();
    let hi = values.iter().max_by(|x, y| x.2.total_cmp(&y.2)).copied().unwrap();
    let coords = |(a, b, _): (usize, usize, f64)| (step(a), SBAR_S2_MIN + step(b) * (SBAR_S2_MAX - SBAR_S2_MIN));
    let h = (1.0 / (g - 1) as f64, (SBAR_S2_MAX - SBAR_S2_MIN) / (g - 1) as f64);
    let (tl, sl, f_low) = refine(coords(lo), h, cfg, 1.0)?;
    let (th, sh, f_high) = refine(coords(hi), h, cfg, -1.0)?;
    Ok(FBounds {
        f_low,
        f_high,
        argmin: to_sbar(tl, sl)?,
        argmax: to_sbar(th, sh)?,
        grid_points: values.len(),
    })
}

/// All `(s1, s2)` grid points used by [`f_bounds`].
pub fn grid_points(grid: usize) -> Result<Vec<(f64, f64)>> {
    let step = |k: usize| k as f64 / (grid.max(2) - 1) as f64;
    let mut out = Vec::with_capacity(grid * grid);
    for a in 0..grid {
        for b in 0..grid {
            out.push(to_sbar(step(a), SBAR_S2_MIN + step(b) * (SBAR_S2_MAX - SBAR_S2_MIN))?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Bounds on covariance entries valid for every graph with all modes in `S̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceLimits {
    pub f_low: f64,
    pub f_high: f64,
    pub sigma_low: f64,
    pub sigma_high: f64,
    /// `|i - j| = 0`.
    pub diagonal: Interval,
    /// `|i - j| = 1`.
    pub adjacent: Interval,
    /// `|i - j| > 1`.
    pub distant: Interval,
}

impl CovarianceLimits {
    pub fn bound_for(&self, i: usize, j: usize) -> Interval {
        match i.abs_diff(j) {
            0 => self.diagonal,
            1 => self.adjacent,
            _ => self.distant,
        }
    }
}

/// Bounds for uniform noise `g`: `sigma_low = g² tau³ f_low / (2π)` and
/// likewise for `sigma_high`.
pub fn covariance_limits(params: &PlatoonParams, bounds: &FBounds) -> Result<CovarianceLimits> {
    params.validate()?;
    let g = params.uniform_noise().ok_or_else(|| {
        Error::param("covariance limits assume the same noise magnitude on every vehicle")
    })?;
    if params.tau <= 0.0 {
        return Err(Error::param("covariance limits need tau > 0"));
    }
    let scale = g * g * params.tau.powi(3) / (2.0 * PI);
    let (lo, hi) = (scale * bounds.f_low, scale * bounds.f_high);
    Ok(CovarianceLimits {
        f_low: bounds.f_low,
        f_high: bounds.f_high,
        sigma_low: lo,
        sigma_high: hi,
        diagonal: Interval { lo: 2.0 * lo, hi: 2.0 * hi },
        adjacent: Interval {
            lo: 0.5 * lo - 1.5 * hi,
            hi: 0.5 * hi - 1.5 * lo,
        },
        distant: Interval { lo: lo - hi, hi: hi - lo },
    })
}

/// Sign of the covariance between the observed and the target pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovSign {
    Positive,
    Negative,
    Zero,
}

impl CovSign {
    pub fn of(x: f64) -> CovSign {
        if x > 0.0 {
            CovSign::Positive
        } else if x < 0.0 {
            CovSign::Negative
        } else {
            CovSign::Zero
        }
    }
}

fn a_plus(lim: &CovarianceLimits, spec: &RiskSpec) -> RiskValue {
    let ratio = (lim.sigma_low / lim.sigma_high).sqrt();
    levelset_risk(spec.r * (1.0 - ratio), spec.r, spec.c)
}

fn a_zero(lim: &CovarianceLimits, spec: &RiskSpec) -> Result<RiskValue> {
    let k = kappa(spec.epsilon)?;
    Ok(levelset_risk(spec.r - k * (2.0 * lim.sigma_low).sqrt(), spec.r, spec.c))
}

/// Lower estimate of the best achievable risk at pair `j` after a collision
/// at pair `i`, given the sign of their covariance.
pub fn best_achievable_single(sign: CovSign, lim: &CovarianceLimits, spec: &RiskSpec) -> Result<RiskValue> {
    spec.validate()?;
    match sign {
        CovSign::Positive => Ok(a_plus(lim, spec)),
        CovSign::Negative => Ok(RiskValue::Zero),
        CovSign::Zero => a_zero(lim, spec),
    }
}

/// Best achievable risk on the complete graph when pair `i` was observed at
/// `d*`.
pub fn complete_graph_limit(i: usize, j: usize, d_star: f64, lim: &CovarianceLimits, spec: &RiskSpec) -> Result<RiskValue> {
    spec.validate()?;
    if i == j {
        return Err(Error::param(format!("observed and target pair coincide ({i})")));
    }
    if !(d_star.is_finite() && d_star >= 0.0) {
        return Err(Error::param(format!("observed distance {d_star} must be >= 0")));
    }
    if i.abs_diff(j) > 1 {
        return a_zero(lim, spec);
    }
    let k = kappa(spec.epsilon)?;
    let avar = 0.5 * (3.0 * spec.r - d_star - k * (6.0 * lim.sigma_low).sqrt());
    Ok(levelset_risk(avar, spec.r, spec.c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub target: f64,
    pub a_plus: RiskValue,
    pub a_zero: RiskValue,
    pub a_minus: RiskValue,
    /// `max {a_plus, a_zero, a_minus}`.
    pub bound: RiskValue,
}

/// A design target `delta` is infeasible when it lies below the largest of
/// the three lower estimates.
pub fn feasibility_screen(target: f64, lim: &CovarianceLimits, spec: &RiskSpec) -> Result<FeasibilityReport> {
    if !(target.is_finite() && target >= 0.0) {
        return Err(Error::param(format!("design target {target} must be >= 0")));
    }
    let a_plus = best_achievable_single(CovSign::Positive, lim, spec)?;
    let a_minus = best_achievable_single(CovSign::Negative, lim, spec)?;
    let a_zero = best_achievable_single(CovSign::Zero, lim, spec)?;
    let bound = a_plus.max(a_zero).max(a_minus);
    let target_value = if target == 0.0 {
        RiskValue::Zero
    } else {
        RiskValue::Finite(target)
    };
    Ok(FeasibilityReport {
        feasible: !(target_value < bound),
        target,
        a_plus,
        a_zero,
        a_minus,
        bound,
    })
}
