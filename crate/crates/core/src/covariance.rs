//! Steady-state distribution of the inter-vehicle distances.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{closed_form_spectrum, GraphKind, Spectrum};
use crate::kernel::{distinct_sorted, f_kernel, zero_delay_mode_integral};
use crate::params::PlatoonParams;
use crate::stability::platoon_stable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LawJson {
    n_pairs: usize,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

/// Gaussian law of the `n - 1` distances `d_i = x_{i+1} - x_i`, with mean
/// `r` in every entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LawJson", into = "LawJson")]
pub struct DistanceLaw {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl TryFrom<LawJson> for DistanceLaw {
    type Error = Error;

    fn try_from(j: LawJson) -> Result<Self> {
        let m = j.n_pairs;
        if j.mean.len() != m || j.cov.len() != m || j.cov.iter().any(|row| row.len() != m) {
            return Err(Error::param(format!("distance law shape does not match n_pairs = {m}")));
        }
        let r = j.mean.first().copied().unwrap_or(0.0);
        if j.mean.iter().any(|&x| x != r) {
            return Err(Error::param("distance law mean entries must all equal r"));
        }
        let cov = DMatrix::from_fn(m, m, |i, k| j.cov[i][k]);
        DistanceLaw::new(r, cov)
    }
}

impl From<DistanceLaw> for LawJson {
    fn from(l: DistanceLaw) -> Self {
        let m = l.n_pairs();
        LawJson {
            n_pairs: m,
            mean: l.mean.iter().copied().collect(),
            cov: (0..m).map(|i| l.cov.row(i).iter().copied().collect()).collect(),
        }
    }
}

impl DistanceLaw {
    /// Validates symmetry and positive semi-definiteness
    /// (smallest eigenvalue at least `-1e-10 * trace`).
    pub fn new(r: f64, cov: DMatrix<f64>) -> Result<Self> {
        let m = cov.nrows();
        if m == 0 || m != cov.ncols() {
            return Err(Error::param("covariance must be square and non-empty"));
        }
        if cov.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("covariance has non-finite entries".into()));
        }
        let scale = cov.amax().max(f64::MIN_POSITIVE);
        for i in 0..m {
            for j in (i + 1)..m {
                if (cov[(i, j)] - cov[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::param(format!(
                        "covariance is not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        let cov = (&cov + cov.transpose()) * 0.5;
        let trace = cov.trace();
        let shifted = &cov + DMatrix::identity(m, m) * (1e-10 * trace.abs());
        if trace <= 0.0 || shifted.cholesky().is_none() {
            return Err(Error::Numeric(
                "covariance is not positive semi-definite".into(),
            ));
        }
        Ok(DistanceLaw {
            mean: DVector::from_element(m, r),
            cov,
        })
    }

    pub fn n_pairs(&self) -> usize {
        self.cov.nrows()
    }

    pub fn r(&self) -> f64 {
        self.mean[0]
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    fn check_pair(&self, i: usize) -> Result<()> {
        if i < 1 || i > self.n_pairs() {
            return Err(Error::param(format!(
                "pair index {i} outside 1..={}",
                self.n_pairs()
            )));
        }
        Ok(())
    }

    /// `sigma_ij` for 1-based pairs.
    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.cov[(i - 1, j - 1)]
    }

    pub fn std_dev(&self, i: usize) -> f64 {
        self.sigma(i, i).sqrt()
    }

    /// Correlation `rho_ij` for 1-based pairs.
    pub fn rho(&self, i: usize, j: usize) -> Result<f64> {
        self.check_pair(i)?;
        self.check_pair(j)?;
        Ok(self.sigma(i, j) / (self.std_dev(i) * self.std_dev(j)))
    }

    pub fn correlation(&self) -> DMatrix<f64> {
        let m = self.n_pairs();
        DMatrix::from_fn(m, m, |i, j| {
            self.cov[(i, j)] / (self.cov[(i, i)] * self.cov[(j, j)]).sqrt()
        })
    }

    pub(crate) fn validate_pair(&self, i: usize) -> Result<()> {
        self.check_pair(i)
    }

    /// One row per pair: `pair,mean,cov_1,...,cov_{n-1}`.
    pub fn to_csv(&self) -> String {
        let m = self.n_pairs();
        let mut out = String::from("pair,mean");
        for j in 1..=m {
            let _ = write!(out, ",cov_{j}");
        }
        out.push('\n');
        for i in 0..m {
            let _ = write!(out, "{},{}", i + 1, self.mean[i]);
            for j in 0..m {
                let _ = write!(out, ",{}", self.cov[(i, j)]);
            }
            out.push('\n');
        }
        out
    }
}

fn check_spectrum(spec: &Spectrum, params: &PlatoonParams) -> Result<()> {
    params.validate()?;
    if spec.n() != params.n {
        return Err(Error::param(format!(
            "spectrum has {} vertices but n = {}",
            spec.n(),
            params.n
        )));
    }
    Ok(())
}

/// `sum_k w_ik w_jk c_k` over modes `k = 2..n`.
fn assemble(spec: &Spectrum, coeff: &[f64]) -> DMatrix<f64> {
    let w = spec.pair_mode_weights();
    let m = w.nrows();
    let mut cov = DMatrix::zeros(m, m);
    for k in 1..spec.n() {
        let col = w.column(k);
        cov += &col * col.transpose() * coeff[k];
    }
    (&cov + cov.transpose()) * 0.5
}

/// Evaluates `eval` once per distinct eigenvalue among modes `2..n`.
fn per_mode<F>(spec: &Spectrum, eval: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let lambdas = &spec.eigenvalues()[1..];
    let groups = distinct_sorted(lambdas);
    let values: Vec<f64> = groups
        .par_iter()
        .map(|(lambda, _)| eval(*lambda))
        .collect::<Result<_>>()?;
    let mut out = vec![0.0; spec.n()];
    for ((_, members), v) in groups.iter().zip(values) {
        for &k in members {
            out[k + 1] = v;
        }
    }
    Ok(out)
}

pub fn distance_covariance(spec: &Spectrum, params: &PlatoonParams) -> Result<DistanceLaw> {
    distance_covariance_with(spec, params, crate::kernel::DEFAULT_TOL)
}

/// Modal sum `sigma_ij = tau³/(2π) sum_k (e_i·q_k)(e_j·q_k) g_k² f(lambda_k tau, beta tau)`.
///
/// `g_k` is taken from the k-th entry of the noise vector, paired with the
/// k-th mode in ascending eigenvalue order.
pub fn distance_covariance_with(spec: &Spectrum, params: &PlatoonParams, tol: f64) -> Result<DistanceLaw> {
    check_spectrum(spec, params)?;
    if params.tau == 0.0 {
        return zero_delay_covariance_with(spec, params, tol);
    }
    let verdict = platoon_stable(spec, params.tau, params.beta);
    if !verdict.stable {
        return Err(Error::Unstable(Box::new(verdict)));
    }
    let (tau, beta) = (params.tau, params.beta);
    let f = per_mode(spec, |lambda| Ok(f_kernel(lambda * tau, beta * tau, tol)?.value))?;
    let scale = tau.powi(3) / (2.0 * PI);
    let coeff: Vec<f64> = (0..spec.n())
        .map(|k| scale * params.g[k] * params.g[k] * f[k])
        .collect();
    DistanceLaw::new(params.r, assemble(spec, &coeff))
}

pub fn zero_delay_covariance(spec: &Spectrum, params: &PlatoonParams) -> Result<DistanceLaw> {
    zero_delay_covariance_with(spec, params, crate::kernel::DEFAULT_TOL)
}

/// Delay-free limit: each mode contributes
/// `(1/2π) g_k² ∫ dr / ((lambda_k beta - r²)² + r² lambda_k²)`.
pub fn zero_delay_covariance_with(spec: &Spectrum, params: &PlatoonParams, tol: f64) -> Result<DistanceLaw> {
    check_spectrum(spec, params)?;
    if params.tau != 0.0 {
        return Err(Error::param(format!(
            "zero-delay covariance requires tau = 0, got {}",
            params.tau
        )));
    }
    let beta = params.beta;
    let integral = per_mode(spec, |lambda| Ok(zero_delay_mode_integral(lambda, beta, tol)?.value))?;
    let coeff: Vec<f64> = (0..spec.n())
        .map(|k| params.g[k] * params.g[k] * integral[k] / (2.0 * PI))
        .collect();
    DistanceLaw::new(params.r, assemble(spec, &coeff))
}

fn uniform_g(params: &PlatoonParams, what: &str) -> Result<f64> {
    params.uniform_noise().ok_or_else(|| {
        Error::param(format!("{what} closed form assumes identical noise on every vehicle"))
    })
}

fn require_stable(kind: &GraphKind, params: &PlatoonParams) -> Result<Spectrum> {
    let spec = closed_form_spectrum(kind, params.n)?;
    let verdict = platoon_stable(&spec, params.tau, params.beta);
    if !verdict.stable {
        return Err(Error::Unstable(Box::new(verdict)));
    }
    Ok(spec)
}

/// Diagonal entry `sigma_c = g² tau³ f(n tau, beta tau) / π` of the
/// complete-graph covariance.
pub fn complete_sigma_c(params: &PlatoonParams, tol: f64) -> Result<f64> {
    params.validate()?;
    let g = uniform_g(params, "complete-graph")?;
    if params.tau <= 0.0 {
        return Err(Error::param("complete-graph closed form needs tau > 0"));
    }
    let (tau, beta) = (params.tau, params.beta);
    let f = f_kernel(params.n as f64 * tau, beta * tau, tol).map_err(|e| match e {
        Error::KernelDomain { .. } => {
            let spec = closed_form_spectrum(&GraphKind::Complete, params.n);
            match spec {
                Ok(s) => Error::Unstable(Box::new(platoon_stable(&s, tau, beta))),
                Err(e) => e,
            }
        }
        other => other,
    })?;
    Ok(g * g * tau.powi(3) * f.value / PI)
}

/// Tridiagonal complete-graph covariance with diagonal `sigma_c` and
/// neighbours `-sigma_c / 2`.
pub fn complete_covariance(m: usize, sigma_c: f64) -> DMatrix<f64> {
    DMatrix::from_fn(m, m, |i, j| match i.abs_diff(j) {
        0 => sigma_c,
        1 => -0.5 * sigma_c,
        _ => 0.0,
    })
}

pub fn special_graph_covariance(kind: &GraphKind, params: &PlatoonParams) -> Result<DistanceLaw> {
    special_graph_covariance_with(kind, params, crate::kernel::DEFAULT_TOL)
}

/// Closed-form covariance of the complete, path and p-cycle families.
pub fn special_graph_covariance_with(kind: &GraphKind, params: &PlatoonParams, tol: f64) -> Result<DistanceLaw> {
    params.validate()?;
    if params.tau <= 0.0 {
        return Err(Error::param("special-graph closed forms need tau > 0"));
    }
    let n = params.n;
    let (tau, beta) = (params.tau, params.beta);
    let cov = match kind {
        GraphKind::Complete => complete_covariance(n - 1, complete_sigma_c(params, tol)?),
        GraphKind::Path => {
            let spec = require_stable(kind, params)?;
            let nf = n as f64;
            let mut cov = DMatrix::zeros(n - 1, n - 1);
            for k in 1..n {
                let w = PI * k as f64 / nf;
                let lambda = spec.eigenvalues()[k];
                let f = f_kernel(lambda * tau, beta * tau, tol)?.value;
                let coeff = 4.0 * tau.powi(3) / (nf * PI) * params.g[k].powi(2) * (0.5 * w).sin().powi(2) * f;
                for i in 1..n {
                    for j in 1..n {
                        cov[(i - 1, j - 1)] += coeff * (w * i as f64).sin() * (w * j as f64).sin();
                    }
                }
            }
            cov
        }
        GraphKind::Pcycle { p } => {
            let g = uniform_g(params, "p-cycle")?;
            require_stable(kind, params)?;
            let nf = n as f64;
            let mut cov = DMatrix::zeros(n - 1, n - 1);
            for m in 1..n {
                let x = PI * m as f64 / nf;
                let lambda = crate::graph::pcycle_eigenvalue(n, *p, m);
                let f = f_kernel(lambda * tau, beta * tau, tol)?.value;
                let coeff = g * g * tau.powi(3) / (2.0 * PI) * 4.0 / nf * x.sin().powi(2) * f;
                for i in 0..n - 1 {
                    for j in 0..n - 1 {
                        cov[(i, j)] += coeff * (2.0 * x * (i as f64 - j as f64)).cos();
                    }
                }
            }
            cov
        }
        GraphKind::Custom { .. } => {
            return Err(Error::param("no closed-form covariance for custom graphs"))
        }
    };
    DistanceLaw::new(params.r, cov)
}
