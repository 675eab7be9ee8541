//! Euler–Maruyama integration of the noisy delayed platoon
//! `dv = -L v(t - tau) dt - beta L (x(t - tau) - r_vec) dt + G dW`,
//! used as an independent check on the analytic distance law.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{spectral_decomposition, CommGraph};
use crate::params::PlatoonParams;
use crate::risk::ConditionalGaussian;

const DIVERGENCE_NORM: f64 = 1e9;
const MIN_WINDOW_SAMPLES: usize = 1000;

/// Constant initial segment on `[-tau, 0]`, as deviations from the
/// equilibrium formation `x_i = i r`, `v = 0`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum History {
    #[default]
    Equilibrium,
    Offset { position: Vec<f64>, velocity: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Step size (s); must divide the delay.
    pub dt: f64,
    /// Simulated time per trial (s).
    pub horizon: f64,
    /// Discarded initial time (s).
    pub burn_in: f64,
    pub trials: usize,
    pub seed: u64,
    /// Time between recorded snapshots (s); defaults to `10 tau`.
    pub stride: Option<f64>,
    #[serde(default)]
    pub history: History,
}

impl SimConfig {
    /// `dt = tau / 20`, 30 s burn-in.
    pub fn for_delay(tau: f64, horizon: f64, trials: usize, seed: u64) -> Self {
        SimConfig {
            dt: tau / 20.0,
            horizon,
            burn_in: 30.0_f64.min(0.5 * horizon),
            trials,
            seed,
            stride: None,
            history: History::Equilibrium,
        }
    }

    fn delay_steps(&self, tau: f64) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param(format!("dt = {} must be > 0", self.dt)));
        }
        let ratio = tau / self.dt;
        let steps = ratio.round();
        if (ratio - steps).abs() * self.dt > 1e-12 {
            return Err(Error::param(format!(
                "dt = {} does not divide the delay tau = {tau}",
                self.dt
            )));
        }
        Ok(steps as usize)
    }

    fn validate(&self, params: &PlatoonParams) -> Result<()> {
        params.validate()?;
        self.delay_steps(params.tau)?;
        if !(self.burn_in >= 0.0 && self.burn_in < self.horizon) {
            return Err(Error::param(format!(
                "burn-in {} must lie in [0, horizon = {})",
                self.burn_in, self.horizon
            )));
        }
        if self.trials == 0 {
            return Err(Error::param("at least one trial is required"));
        }
        if let Some(s) = self.stride {
            if !(s > 0.0) {
                return Err(Error::param(format!("stride {s} must be > 0")));
            }
        }
        if let History::Offset { position, velocity } = &self.history {
            if position.len() != params.n || velocity.len() != params.n {
                return Err(Error::param("history offsets must have one entry per vehicle"));
            }
        }
        Ok(())
    }
}

/// Snapshots of one trial: `distances[s][i]` is pair `i + 1` at `times[s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSamples {
    pub trial: usize,
    pub times: Vec<f64>,
    pub distances: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub n_pairs: usize,
    pub trials: Vec<TrialSamples>,
}

/// Sample statistics with standard errors taken from the spread of the
/// per-trial estimates, which accounts for correlation between snapshots.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(into = "LawRows")]
pub struct EmpiricalLaw {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
    pub mean_se: DVector<f64>,
    pub cov_se: DMatrix<f64>,
    pub count: usize,
}

#[derive(Serialize)]
struct LawRows {
    count: usize,
    mean: Vec<f64>,
    mean_se: Vec<f64>,
    cov: Vec<Vec<f64>>,
    cov_se: Vec<Vec<f64>>,
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl From<EmpiricalLaw> for LawRows {
    fn from(l: EmpiricalLaw) -> Self {
        LawRows {
            count: l.count,
            mean: l.mean.iter().copied().collect(),
            mean_se: l.mean_se.iter().copied().collect(),
            cov: rows(&l.cov),
            cov_se: rows(&l.cov_se),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regression {
    /// Least-squares slope of `d_j` on `d_i`.
    pub slope: f64,
    pub slope_se: f64,
    pub rho: f64,
    pub rho_se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalConditional {
    pub estimate: ConditionalGaussian,
    pub mean_se: f64,
    pub count: usize,
}

fn spread_se(values: &[f64]) -> f64 {
    let t = values.len() as f64;
    if values.len() < 2 {
        return f64::INFINITY;
    }
    let m = values.iter().sum::<f64>() / t;
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (t - 1.0);
    (var / t).sqrt()
}

impl SampleSet {
    pub fn count(&self) -> usize {
        self.trials.iter().map(|t| t.distances.len()).sum()
    }

    fn all(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.trials.iter().flat_map(|t| t.distances.iter())
    }

    /// Pooled statistics around the global mean.
    pub fn law(&self) -> Result<EmpiricalLaw> {
        let m = self.n_pairs;
        let count = self.count();
        if count < 2 {
            return Err(Error::InsufficientData { count, required: 2 });
        }
        let mut mean = DVector::zeros(m);
        for d in self.all() {
            mean += DVector::from_column_slice(d);
        }
        mean /= count as f64;

        let per_trial: Vec<(DVector<f64>, DMatrix<f64>)> = self
            .trials
            .iter()
            .filter(|t| !t.distances.is_empty())
            .map(|t| {
                let k = t.distances.len() as f64;
                let mut mu = DVector::zeros(m);
                let mut c = DMatrix::zeros(m, m);
                for d in &t.distances {
                    let x = DVector::from_column_slice(d);
                    mu += &x;
                    let dev = x - &mean;
                    c += &dev * dev.transpose();
                }
                (mu / k, c / k)
            })
            .collect();

        let mut cov = DMatrix::zeros(m, m);
        for d in self.all() {
            let dev = DVector::from_column_slice(d) - &mean;
            cov += &dev * dev.transpose();
        }
        cov /= (count - 1) as f64;

        let mean_se = DVector::from_fn(m, |i, _| {
            spread_se(&per_trial.iter().map(|(mu, _)| mu[i]).collect::<Vec<_>>())
        });
        let cov_se = DMatrix::from_fn(m, m, |i, j| {
            spread_se(&per_trial.iter().map(|(_, c)| c[(i, j)]).collect::<Vec<_>>())
        });
        Ok(EmpiricalLaw {
            mean,
            cov,
            mean_se,
            cov_se,
            count,
        })
    }

    /// Regression of `d_j` on `d_i` (1-based pairs).
    pub fn regression(&self, i: usize, j: usize) -> Result<Regression> {
        self.check_pair(i)?;
        self.check_pair(j)?;
        let stats = |rows: &mut dyn Iterator<Item = &Vec<f64>>| {
            let (mut n, mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for d in rows {
                let (x, y) = (d[i - 1], d[j - 1]);
                n += 1.0;
                sx += x;
                sy += y;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
            }
            let (mx, my) = (sx / n, sy / n);
            let vx = sxx / n - mx * mx;
            let vy = syy / n - my * my;
            let cxy = sxy / n - mx * my;
            (cxy / vx, cxy / (vx * vy).sqrt())
        };
        let (slope, rho) = stats(&mut self.all());
        let per: Vec<(f64, f64)> = self
            .trials
            .iter()
            .filter(|t| t.distances.len() > 2)
            .map(|t| stats(&mut t.distances.iter()))
            .collect();
        Ok(Regression {
            slope,
            slope_se: spread_se(&per.iter().map(|p| p.0).collect::<Vec<_>>()),
            rho,
            rho_se: spread_se(&per.iter().map(|p| p.1).collect::<Vec<_>>()),
        })
    }

    fn check_pair(&self, i: usize) -> Result<()> {
        if i < 1 || i > self.n_pairs {
            return Err(Error::param(format!("pair index {i} outside 1..={}", self.n_pairs)));
        }
        Ok(())
    }

    /// Raw dump with columns `trial,time,pair,distance`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("trial,time,pair,distance\n");
        for t in &self.trials {
            for (time, d) in t.times.iter().zip(&t.distances) {
                for (p, x) in d.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{},{}", t.trial, time, p + 1, x);
                }
            }
        }
        out
    }
}

/// Mean and spread of `d_j` over snapshots with `|d_i - d*| <= window`.
pub fn empirical_conditional(samples: &SampleSet, i: usize, j: usize, d_star: f64, window: f64) -> Result<EmpiricalConditional> {
    samples.check_pair(i)?;
    samples.check_pair(j)?;
    if i == j {
        return Err(Error::param(format!("observed and target pair coincide ({i})")));
    }
    let mut per_trial = Vec::new();
    let (mut n, mut s, mut ss) = (0usize, 0.0, 0.0);
    for t in &samples.trials {
        let (mut k, mut ts) = (0usize, 0.0);
        for d in &t.distances {
            if (d[i - 1] - d_star).abs() <= window {
                let y = d[j - 1];
                n += 1;
                s += y;
                ss += y * y;
                k += 1;
                ts += y;
            }
        }
        if k > 0 {
            per_trial.push((k, ts / k as f64));
        }
    }
    if n < MIN_WINDOW_SAMPLES {
        return Err(Error::InsufficientData {
            count: n,
            required: MIN_WINDOW_SAMPLES,
        });
    }
    let mean = s / n as f64;
    let var = (ss / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
    // count-weighted spread of trial means around the pooled mean
    let between: f64 = per_trial
        .iter()
        .map(|(k, m)| (*k as f64).powi(2) * (m - mean).powi(2))
        .sum::<f64>();
    let t = per_trial.len() as f64;
    let mean_se = if t > 1.0 {
        (between / (n as f64).powi(2) * t / (t - 1.0)).sqrt()
    } else {
        (var / n as f64).sqrt()
    };
    Ok(EmpiricalConditional {
        estimate: ConditionalGaussian::new(mean, var.sqrt())?,
        mean_se,
        count: n,
    })
}

struct Integrator<'a> {
    lap: &'a DMatrix<f64>,
    beta: f64,
    g: &'a [f64],
    r: f64,
    dt: f64,
    delay: usize,
    stride_steps: usize,
    burn_steps: usize,
    total_steps: usize,
}

impl Integrator<'_> {
    fn run(&self, cfg: &SimConfig, trial: usize) -> std::result::Result<TrialSamples, (f64, DVector<f64>)> {
        let n = self.lap.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(trial as u64);
        let (mut y, mut v) = match &cfg.history {
            History::Equilibrium => (DVector::zeros(n), DVector::zeros(n)),
            History::Offset { position, velocity } => {
                (DVector::from_column_slice(position), DVector::from_column_slice(velocity))
            }
        };
        // ring of the last `delay` states; slot k % delay holds step k - delay
        let d = self.delay.max(1);
        let mut ring_y = vec![y.clone(); d];
        let mut ring_v = vec![v.clone(); d];
        let sqrt_dt = self.dt.sqrt();
        let mut times = Vec::new();
        let mut distances = Vec::new();
        let mut force = DVector::zeros(n);
        for step in 0..self.total_steps {
            let slot = step % d;
            let (yd, vd) = if self.delay == 0 {
                (&y, &v)
            } else {
                (&ring_y[slot], &ring_v[slot])
            };
            force.gemv(-1.0, self.lap, &(vd + yd * self.beta), 0.0);
            let y_next = &y + &v * self.dt;
            let mut v_next = &v + &force * self.dt;
            for (k, vk) in v_next.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *vk += self.g[k] * sqrt_dt * z;
            }
            if self.delay > 0 {
                ring_y[slot].copy_from(&y);
                ring_v[slot].copy_from(&v);
            }
            y = y_next;
            v = v_next;
            let done = step + 1;
            if done % 64 == 0 || done == self.total_steps {
                let norm = y.norm() + v.norm();
                if !(norm <= DIVERGENCE_NORM) {
                    return Err((done as f64 * self.dt, y));
                }
            }
            if done > self.burn_steps && (done - self.burn_steps) % self.stride_steps == 0 {
                times.push(done as f64 * self.dt);
                distances.push((0..n - 1).map(|i| self.r + y[i + 1] - y[i]).collect());
            }
        }
        Ok(TrialSamples {
            trial,
            times,
            distances,
        })
    }
}

/// Runs all trials and keeps every post-burn-in snapshot.
pub fn simulate_samples(graph: &CommGraph, params: &PlatoonParams, cfg: &SimConfig) -> Result<SampleSet> {
    cfg.validate(params)?;
    if graph.n() != params.n {
        return Err(Error::param(format!("graph has {} vehicles but n = {}", graph.n(), params.n)));
    }
    let lap = graph.laplacian().0;
    let delay = cfg.delay_steps(params.tau)?;
    let stride = cfg.stride.unwrap_or(10.0 * params.tau).max(cfg.dt);
    let integ = Integrator {
        lap: &lap,
        beta: params.beta,
        g: &params.g,
        r: params.r,
        dt: cfg.dt,
        delay,
        stride_steps: ((stride / cfg.dt).round() as usize).max(1),
        burn_steps: (cfg.burn_in / cfg.dt).round() as usize,
        total_steps: (cfg.horizon / cfg.dt).round() as usize,
    };
    let results: Vec<_> = (0..cfg.trials).into_par_iter().map(|t| integ.run(cfg, t)).collect();
    let mut trials = Vec::with_capacity(results.len());
    for res in results {
        match res {
            Ok(t) => trials.push(t),
            Err((time, y)) => {
                let spec = spectral_decomposition(&graph.laplacian())?;
                let proj = spec.eigenvectors().transpose() * y;
                let mode = (1..params.n)
                    .max_by(|&a, &b| proj[a].abs().total_cmp(&proj[b].abs()))
                    .map(|k| k + 1)
                    .unwrap_or(2);
                return Err(Error::Divergence { time, mode });
            }
        }
    }
    Ok(SampleSet {
        n_pairs: params.n - 1,
        trials,
    })
}

pub fn simulate(graph: &CommGraph, params: &PlatoonParams, cfg: &SimConfig) -> Result<EmpiricalLaw> {
    simulate_samples(graph, params, cfg)?.law()
}
