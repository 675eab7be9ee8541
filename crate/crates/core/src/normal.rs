//! Error function, its inverse, and the standard normal distribution.
//!
//! `erf`/`erfc` come from `libm`. The inverses start from Giles' rational
//! seed and are polished with Newton steps on `erf` (central region) or
//! `erfc` (tails), which keeps full relative precision for probabilities
//! close to 0 or 1.

use std::f64::consts::{FRAC_2_SQRT_PI, PI, SQRT_2};

pub fn erf(x: f64) -> f64 {
    libm::erf(x)
}

pub fn erfc(x: f64) -> f64 {
    libm::erfc(x)
}

fn giles_seed(y: f64, w: f64) -> f64 {
    let p = if w < 5.0 {
        let w = w - 2.5;
        let mut p = 2.810_226_36e-08;
        p = 3.432_739_39e-07 + p * w;
        p = -3.523_387_7e-06 + p * w;
        p = -4.391_506_54e-06 + p * w;
        p = 0.000_218_580_87 + p * w;
        p = -0.001_253_725_03 + p * w;
        p = -0.004_177_681_64 + p * w;
        p = 0.246_640_727 + p * w;
        1.501_409_41 + p * w
    } else {
        let w = w.sqrt() - 3.0;
        let mut p = -0.000_200_214_257;
        p = 0.000_100_950_558 + p * w;
        p = 0.001_349_343_22 + p * w;
        p = -0.003_673_428_44 + p * w;
        p = 0.005_739_507_73 + p * w;
        p = -0.007_622_461_3 + p * w;
        p = 0.009_438_870_47 + p * w;
        p = 1.001_674_06 + p * w;
        2.832_976_82 + p * w
    };
    p * y
}

/// Inverse of `erfc` on (0, 2).
pub fn erfc_inv(q: f64) -> f64 {
    if q.is_nan() || q <= 0.0 || q >= 2.0 {
        return match q {
            q if q == 0.0 => f64::INFINITY,
            q if q == 2.0 => f64::NEG_INFINITY,
            _ => f64::NAN,
        };
    }
    if q > 1.0 {
        return -erfc_inv(2.0 - q);
    }
    // (1 - y)(1 + y) = q (2 - q) without cancellation.
    let w = -(q * (2.0 - q)).ln();
    if w >= 16.0 {
        return erfc_inv_far_tail(q);
    }
    let mut x = giles_seed(1.0 - q, w);
    if q > 0.5 {
        // Central region: Newton on erf is better conditioned.
        let y = 1.0 - q;
        for _ in 0..6 {
            let step = (erf(x) - y) / (FRAC_2_SQRT_PI * (-x * x).exp());
            x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1e-300) {
                break;
            }
        }
    } else {
        for _ in 0..8 {
            let d = FRAC_2_SQRT_PI * (-x * x).exp();
            if d == 0.0 {
                break;
            }
            let step = (erfc(x) - q) / (-d);
            x -= step;
            if step.abs() <= 1e-16 * x.abs() {
                break;
            }
        }
    }
    x
}

/// `erfc_inv` for tiny `q`: asymptotic seed, then Newton on `ln erfc`,
/// which stays well scaled where `erfc` itself approaches underflow.
fn erfc_inv_far_tail(q: f64) -> f64 {
    let lq = q.ln();
    let mut x = (-lq).sqrt();
    for _ in 0..4 {
        x = (-lq - (PI.sqrt() * x).ln()).sqrt();
    }
    for _ in 0..8 {
        let le = erfc(x).ln();
        let slope = -FRAC_2_SQRT_PI * (-x * x - le).exp();
        let step = (le - lq) / slope;
        x -= step;
        if step.abs() <= 1e-16 * x {
            break;
        }
    }
    x
}

/// Inverse of `erf` on (-1, 1).
pub fn erf_inv(y: f64) -> f64 {
    if y.is_nan() || !(-1.0..=1.0).contains(&y) {
        return f64::NAN;
    }
    if y >= 0.0 {
        erfc_inv(1.0 - y)
    } else {
        -erfc_inv(1.0 + y)
    }
}

pub fn std_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

pub fn std_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// `ln Phi(x)`, accurate far into the lower tail where `Phi` underflows.
pub fn log_std_cdf(x: f64) -> f64 {
    if x > -30.0 {
        return std_cdf(x).ln();
    }
    // Phi(x) = phi(x)/|x| * (1 - 1/x² + 3/x⁴ - 15/x⁶ + 105/x⁸ - ...)
    let z = 1.0 / (x * x);
    let series = 1.0 - z * (1.0 - 3.0 * z * (1.0 - 5.0 * z * (1.0 - 7.0 * z * (1.0 - 9.0 * z))));
    -0.5 * x * x - 0.5 * (2.0 * PI).ln() - (-x).ln() + series.ln()
}

/// Standard normal quantile, `Phi^{-1}(p)`.
pub fn std_quantile(p: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * p)
}
