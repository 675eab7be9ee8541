//! Adaptive Simpson quadrature with Richardson error estimates.

/// A quadrature result with its estimated absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    /// False when some subinterval hit the depth limit before meeting tolerance.
    pub converged: bool,
}

impl std::ops::Add for Estimate {
    type Output = Estimate;

    fn add(self, rhs: Estimate) -> Estimate {
        Estimate {
            value: self.value + rhs.value,
            error: self.error + rhs.error,
            converged: self.converged && rhs.converged,
        }
    }
}

const MAX_DEPTH: u32 = 48;
/// Levels refined unconditionally, so a chance agreement between the 3- and
/// 5-point rules on a coarse interval cannot end the recursion.
const MIN_DEPTH: u32 = 2;

struct Simpson<'a, F> {
    f: &'a F,
    converged: bool,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn refine(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
        hint: f64,
    ) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // the parent's discrepancy, scaled by h^4 and split over two halves,
        // bounds how small this one can plausibly be
        let err = delta.abs().max(hint) / 15.0;
        if (err <= tol && depth >= MIN_DEPTH) || depth >= MAX_DEPTH || (b - a) <= f64::EPSILON * a.abs().max(b.abs()) * 8.0 {
            if err > tol {
                self.converged = false;
            }
            return (left + right + delta / 15.0, err);
        }
        let hint = delta.abs() / 32.0;
        let (lv, le) = self.refine(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1, hint);
        let (rv, re) = self.refine(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1, hint);
        (lv + rv, le + re)
    }
}

/// Integrates `f` over `[a, b]` to absolute tolerance `abs_tol`.
///
/// The interval is first cut into `splits` equal pieces so narrow features
/// are not skipped by the initial five-point rule.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, abs_tol: f64, splits: usize) -> Estimate {
    let splits = splits.max(1);
    let h = (b - a) / splits as f64;
    let mut s = Simpson { f, converged: true };
    let mut total = 0.0;
    let mut error = 0.0;
    let piece_tol = abs_tol / splits as f64;
    let mut x0 = a;
    let mut f0 = f(a);
    for k in 0..splits {
        let x1 = if k + 1 == splits { b } else { a + h * (k + 1) as f64 };
        let xm = 0.5 * (x0 + x1);
        let fm = f(xm);
        let f1 = f(x1);
        let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
        let (v, e) = s.refine(x0, x1, f0, fm, f1, whole, piece_tol, 0, 0.0);
        total += v;
        error += e;
        x0 = x1;
        f0 = f1;
    }
    Estimate {
        value: total,
        error,
        converged: s.converged,
    }
}

/// Integrates to a tolerance relative to the magnitude of the integral
/// itself, using a coarse pass to size the target.
pub fn adaptive_simpson_rel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, rel_tol: f64, splits: usize) -> Estimate {
    let coarse = adaptive_simpson(f, a, b, f64::INFINITY, splits.max(4) * 4);
    let scale = coarse.value.abs().max(f64::MIN_POSITIVE);
    adaptive_simpson(f, a, b, rel_tol * scale, splits)
}
