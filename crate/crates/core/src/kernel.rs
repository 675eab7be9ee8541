//! The per-mode variance kernel
//! `f(s1, s2) = ∫ dr / ((s1 s2 - r² cos r)² + r² (s1 - r sin r)²)`
//! and its zero-delay counterpart.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{adaptive_simpson, adaptive_simpson_rel, Estimate};
use crate::stability::{in_stability_set, solve_a};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const MIN_TOL: f64 = 1e-12;
pub const MAX_TOL: f64 = 1e-4;

const MAX_RADIUS: f64 = 1e7;
const PANEL_SPLITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: f64,
    /// Estimated absolute error of `value`.
    pub est_error: f64,
}

/// The integrand of `f`. Its denominator is `|s1 (s2 + i r) - r² e^{ir}|²`.
pub fn integrand(s1: f64, s2: f64, r: f64) -> f64 {
    let (sin, cos) = r.sin_cos();
    let a = s1 * s2 - r * r * cos;
    let b = s1 - r * sin;
    1.0 / (a * a + r * r * b * b)
}

/// Integrand of the zero-delay mode integral.
pub fn zero_delay_integrand(lambda: f64, beta: f64, r: f64) -> f64 {
    let a = lambda * beta - r * r;
    let b = r * lambda;
    1.0 / (a * a + b * b)
}

fn check_tol(tol: f64) -> Result<()> {
    if !(MIN_TOL..=MAX_TOL).contains(&tol) {
        return Err(Error::param(format!(
            "kernel tolerance {tol:e} outside [{MIN_TOL:e}, {MAX_TOL:e}]"
        )));
    }
    Ok(())
}

/// Integrates an even integrand that decays like `r^-4` over the real line.
///
/// `[0, R]` is cut into π-wide panels with an extra breakpoint at `split`
/// (the resonance). Beyond `R` the tail is `1/(3R³)` up to a relative
/// deviation `tail_dev(R)`. `R` doubles until that deviation is small
/// compared with `tol` times the running total.
fn integrate_even<F, T>(f: &F, split: f64, r0: f64, tol: f64, tail_dev: T) -> Result<KernelValue>
where
    F: Fn(f64) -> f64,
    T: Fn(f64) -> f64,
{
    let mut sum = 0.0;
    let mut err = 0.0;
    let mut lo = 0.0;
    let mut radius = r0;
    loop {
        while lo < radius {
            let hi = (lo + PI).min(radius);
            let mut pieces = vec![(lo, hi)];
            if split > lo && split < hi {
                pieces = vec![(lo, split), (split, hi)];
            }
            for (a, b) in pieces {
                // Richardson's |S2 - S1|/15 is optimistic next to the resonance, so
                // panels are driven to |S2 - S1| itself and that is what gets reported
                let est: Estimate = adaptive_simpson_rel(f, a, b, 0.5 * tol / 15.0, PANEL_SPLITS);
                if !est.converged || !est.value.is_finite() {
                    return Err(Error::Numeric(format!(
                        "kernel quadrature failed on panel [{a}, {b}]"
                    )));
                }
                sum += est.value;
                err += 15.0 * est.error;
            }
            lo = hi;
        }
        let tail = 1.0 / (3.0 * radius.powi(3));
        let dev = tail_dev(radius);
        let tail_err = tail * dev;
        if dev < 1.0 && tail_err <= 0.25 * tol * (sum + tail) {
            return Ok(KernelValue {
                value: 2.0 * (sum + tail),
                est_error: 2.0 * (err + tail_err),
            });
        }
        radius *= 2.0;
        if radius > MAX_RADIUS {
            return Err(Error::Numeric(format!(
                "kernel tail did not reach tolerance {tol:e} by R = {MAX_RADIUS:e}"
            )));
        }
    }
}

/// `f(s1, s2)` without caching.
pub fn f_kernel_uncached(s1: f64, s2: f64, tol: f64) -> Result<KernelValue> {
    check_tol(tol)?;
    if !in_stability_set(s1, s2) {
        return Err(Error::KernelDomain { s1, s2 });
    }
    let a = solve_a(s1);
    // |1 - w|^-2 - 1 with |w| <= s1/R + s1 s2/R²
    let tail_dev = |r: f64| {
        let e = s1 / r + s1 * s2 / (r * r);
        if e >= 1.0 {
            f64::INFINITY
        } else {
            1.0 / ((1.0 - e) * (1.0 - e)) - 1.0
        }
    };
    integrate_even(&|r| integrand(s1, s2, r), a, (10.0 * s1).max(50.0), tol, tail_dev)
}

type CacheKey = (i64, i64, i64);

fn cache() -> &'static Mutex<HashMap<CacheKey, KernelValue>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, KernelValue>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn key(s1: f64, s2: f64, tol: f64) -> CacheKey {
    let q = |x: f64| (x * 1e15).round() as i64;
    (q(s1), q(s2), q(tol))
}

/// `f(s1, s2)` to relative tolerance `tol`, memoised process-wide.
pub fn f_kernel(s1: f64, s2: f64, tol: f64) -> Result<KernelValue> {
    let k = key(s1, s2, tol);
    if let Some(v) = cache().lock().unwrap_or_else(|e| e.into_inner()).get(&k) {
        return Ok(*v);
    }
    let v = f_kernel_uncached(s1, s2, tol)?;
    cache().lock().unwrap_or_else(|e| e.into_inner()).insert(k, v);
    Ok(v)
}

/// Plain adaptive quadrature of the kernel integrand over `[a, b]`.
pub fn integrate_kernel(s1: f64, s2: f64, a: f64, b: f64, abs_tol: f64) -> Estimate {
    let panels = (((b - a).abs() / PI).ceil() as usize).max(1) * PANEL_SPLITS;
    adaptive_simpson(&|r| integrand(s1, s2, r), a, b, abs_tol, panels)
}

/// `∫ dr / ((λβ - r²)² + r²λ²)` over the real line, whose exact value is
/// `π / (λ² β)`.
pub fn zero_delay_mode_integral(lambda: f64, beta: f64, tol: f64) -> Result<KernelValue> {
    check_tol(tol)?;
    if !(lambda > 0.0 && beta > 0.0 && lambda.is_finite() && beta.is_finite()) {
        return Err(Error::param(format!(
            "zero-delay mode integral needs lambda > 0 and beta > 0, got ({lambda}, {beta})"
        )));
    }
    let peak = (lambda * beta).sqrt();
    let r0 = (10.0 * lambda.max(peak)).max(50.0);
    let tail_dev = |r: f64| {
        let u = (lambda * lambda - 2.0 * lambda * beta).abs() / (r * r)
            + (lambda * beta).powi(2) / r.powi(4);
        if u >= 1.0 {
            f64::INFINITY
        } else {
            u / (1.0 - u)
        }
    };
    integrate_even(&|r| zero_delay_integrand(lambda, beta, r), peak, r0, tol, tail_dev)
}

/// Groups values equal to relative precision `1e-10`, keeping the first of
/// each run. Input must be sorted.
pub(crate) fn distinct_sorted(values: &[f64]) -> Vec<(f64, Vec<usize>)> {
    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match groups.last_mut() {
            Some((rep, members)) if (v - *rep).abs() <= 1e-10 * rep.abs().max(v.abs()) => {
                members.push(i)
            }
            _ => groups.push((v, vec![i])),
        }
    }
    groups
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Trapezoid on a fine grid out to a large radius plus the leading tail.
    fn brute_force(s1: f64, s2: f64) -> f64 {
        let big_r = 2000.0;
        let h = 1e-4;
        let n = (big_r / h) as usize;
        let mut s = 0.5 * (integrand(s1, s2, 0.0) + integrand(s1, s2, big_r));
        for k in 1..n {
            s += integrand(s1, s2, k as f64 * h);
        }
        2.0 * (s * h + 1.0 / (3.0 * big_r.powi(3)))
    }

    #[test]
    fn integrand_at_origin() {
        let (s1, s2) = (0.8, 0.04);
        assert_eq!(integrand(s1, s2, 0.0), 1.0 / (s1 * s2).powi(2));
        assert_eq!(zero_delay_integrand(3.0, 0.5, 0.0), 1.0 / (1.5f64).powi(2));
    }

    #[test]
    fn matches_brute_force() {
        for (s1, s2) in [(0.8, 0.04), (0.3, 0.5), (1.1, 0.2178)] {
            let f = f_kernel_uncached(s1, s2, 1e-10).unwrap();
            let b = brute_force(s1, s2);
            assert!((f.value - b).abs() < 1e-6 * b, "({s1}, {s2}): {} vs {b}", f.value);
            assert!(f.est_error <= 1e-10 * f.value);
        }
    }

    #[test]
    fn outside_region_is_domain_error() {
        assert!(matches!(f_kernel(1.6, 0.1, 1e-10), Err(Error::KernelDomain { .. })));
        assert!(matches!(f_kernel(0.8, 0.7, 1e-10), Err(Error::KernelDomain { .. })));
        assert!(f_kernel(0.8, 0.04, 1e-3).is_err());
    }

    #[test]
    fn integrand_is_even() {
        let (s1, s2) = (0.8, 0.3);
        let l = integrate_kernel(s1, s2, -60.0, 0.0, 1e-12);
        let r = integrate_kernel(s1, s2, 0.0, 60.0, 1e-12);
        assert!((l.value - r.value).abs() < 1e-10 * r.value);
    }

    #[test]
    fn halving_tolerance_stays_within_reported_error() {
        let (s1, s2) = (0.5, 0.3);
        let coarse = f_kernel_uncached(s1, s2, 1e-6).unwrap();
        let fine = f_kernel_uncached(s1, s2, 5e-7).unwrap();
        assert!((coarse.value - fine.value).abs() <= coarse.est_error);
    }

    #[test]
    fn cache_returns_identical_value() {
        let a = f_kernel(0.37, 0.21, 1e-9).unwrap();
        let b = f_kernel(0.37, 0.21, 1e-9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_delay_closed_form() {
        for (lambda, beta) in [(0.4, 1.0), (2.0, 1.0), (20.0, 0.5), (1.0, 3.0)] {
            let v = zero_delay_mode_integral(lambda, beta, 1e-10).unwrap();
            let exact = PI / (lambda * lambda * beta);
            assert!((v.value - exact).abs() < 1e-9 * exact, "{lambda} {beta}");
        }
    }

    #[test]
    fn small_delay_limit_approaches_zero_delay_integral() {
        let (lambda, beta) = (2.0, 1.0);
        let exact = PI / (lambda * lambda * beta);
        let gap = |tau: f64| {
            let f = f_kernel_uncached(lambda * tau, beta * tau, 1e-10).unwrap().value;
            (tau.powi(3) * f - exact).abs() / exact
        };
        let g3 = gap(1e-3);
        let g4 = gap(1e-4);
        assert!(g4 < g3);
        assert!(g3 < 1e-2);
    }

    #[test]
    fn grouping_repeated_values() {
        let g = distinct_sorted(&[0.0, 2.0, 2.0 + 1e-13, 4.0]);
        assert_eq!(g.len(), 3);
        assert_eq!(g[1].1, vec![1, 2]);
    }
}
