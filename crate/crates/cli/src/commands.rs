use std::fmt::Write as _;

use platoon_risk::covariance::distance_covariance_with;
use platoon_risk::limits::{covariance_limits, f_bounds, feasibility_screen, FBoundsConfig};
use platoon_risk::risk::{
    conditional_multi, conditional_single, range_tail, risk_from_conditional, risk_profile, ConditionalGaussian,
    ObservationKind, RiskProfile, RiskValue,
};
use platoon_risk::sim::{simulate_samples, SampleSet, SimConfig};
use platoon_risk::{platoon_stable, spectral_decomposition, CommGraph, DistanceLaw, EdgeAction, PlatoonParams};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::scenario::Scenario;

/// A command result in both output formats.
pub struct Report {
    pub json: Value,
    pub csv: String,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("results serialise")
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn risk_cells(r: RiskValue) -> String {
    format!("{},{}", r.state(), opt(r.delta()))
}

fn law_for(graph: &CommGraph, params: &PlatoonParams, tol: f64) -> Result<DistanceLaw, CliError> {
    let spectrum = spectral_decomposition(&graph.laplacian())?;
    Ok(distance_covariance_with(&spectrum, params, tol)?)
}

/// Risk of every pair with nothing observed.
fn unconditional(law: &DistanceLaw, params: &PlatoonParams) -> Result<Vec<RiskValue>, CliError> {
    let spec = params.risk_spec();
    (1..=law.n_pairs())
        .map(|j| {
            let cg = ConditionalGaussian::new(params.r, law.std_dev(j))?;
            Ok(risk_from_conditional(&cg, &spec)?)
        })
        .collect()
}

pub fn stability(s: &Scenario) -> Result<Report, CliError> {
    let params = s.platoon()?;
    let spectrum = spectral_decomposition(&s.graph()?.laplacian())?;
    let verdict = platoon_stable(&spectrum, params.tau, params.beta);
    let mut csv = String::from("mode,s1,s2,in_s,in_sbar\n");
    for m in &verdict.modes {
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            m.mode,
            m.s1,
            m.s2,
            m.in_s,
            platoon_risk::sbar_contains(m.s1, m.s2)
        );
    }
    let json = json!({
        "stable": verdict.stable,
        "all_in_sbar": verdict.all_in_sbar(),
        "summary": verdict.summary(),
        "eigenvalues": spectrum.eigenvalues(),
        "modes": verdict.modes,
    });
    Ok(Report { json, csv })
}

pub fn covariance(s: &Scenario, tol: f64) -> Result<Report, CliError> {
    let params = s.platoon()?;
    let law = law_for(&s.graph()?, &params, tol)?;
    Ok(Report {
        json: to_value(&law),
        csv: law.to_csv(),
    })
}

fn conditional_report(target: usize, cg: &ConditionalGaussian, risk: RiskValue, extra: Value) -> Report {
    let mut json = json!({
        "pair": target,
        "mu_tilde": cg.mean,
        "sigma_tilde": cg.std,
        "risk": risk,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut json, extra) {
        m.extend(e);
    }
    let csv = format!(
        "pair,state,delta,mu_tilde,sigma_tilde\n{target},{},{},{}\n",
        risk_cells(risk),
        cg.mean,
        cg.std
    );
    Report { json, csv }
}

pub fn risk_single(s: &Scenario, tol: f64) -> Result<Report, CliError> {
    let params = s.platoon()?;
    let j = s.require_target()?;
    let (i, d_star) = match s.observations.entries() {
        [o] => match o.kind {
            ObservationKind::Exact(d) => (o.pair, d),
            ObservationKind::Range(_) => {
                return Err(CliError::Scenario("risk single needs an exact observation; use risk range".into()))
            }
        },
        other => {
            return Err(CliError::Scenario(format!(
                "risk single needs exactly one observation, got {}",
                other.len()
            )))
        }
    };
    let law = law_for(&s.graph()?, &params, tol)?;
    let cg = conditional_single(&law, i, j, d_star)?;
    let risk = risk_from_conditional(&cg, &params.risk_spec())?;
    Ok(conditional_report(j, &cg, risk, json!({"observed": i, "d_star": d_star})))
}

pub fn risk_multi(s: &Scenario, tol: f64) -> Result<Report, CliError> {
    let params = s.platoon()?;
    let j = s.require_target()?;
    if !s.observations.all_exact() {
        return Err(CliError::Scenario("risk multi needs exact observations only".into()));
    }
    let law = law_for(&s.graph()?, &params, tol)?;
    let cg = conditional_multi(&law, &s.observations, j)?;
    let risk = risk_from_conditional(&cg, &params.risk_spec())?;
    Ok(conditional_report(j, &cg, risk, json!({"observed": s.observations.pairs()})))
}

pub fn risk_range(s: &Scenario, tol: f64) -> Result<Report, CliError> {
    let params = s.platoon()?;
    let j = s.require_target()?;
    let (i, delta) = match s.observations.entries() {
        [o] => match o.kind {
            ObservationKind::Range(d) => (o.pair, d),
            ObservationKind::Exact(_) => {
                return Err(CliError::Scenario("risk range needs a range observation".into()))
            }
        },
        other => {
            return Err(CliError::Scenario(format!(
                "risk range needs exactly one observation, got {}",
                other.len()
            )))
        }
    };
    let law = law_for(&s.graph()?, &params, tol)?;
    let spec = params.risk_spec();
    let tail = range_tail(&law, i, j, delta, &spec)?;
    let risk = platoon_risk::risk::levelset_risk(tail.avar, spec.r, spec.c);
    let json = json!({
        "pair": j,
        "observed": i,
        "delta_star": delta,
        "tail": tail,
        "risk": risk,
    });
    let csv = format!("pair,state,delta,mu_tilde,sigma_tilde\n{j},{},,\n", risk_cells(risk));
    Ok(Report { json, csv })
}

pub fn risk_profile_cmd(s: &Scenario, tol: f64) -> Result<Report, CliError> {
    let params = s.platoon()?;
    let law = law_for(&s.graph()?, &params, tol)?;
    let profile = risk_profile(&law, &s.observations, &params.risk_spec())?;
    Ok(Report {
        json: to_value(&profile),
        csv: profile.to_csv(),
    })
}

pub fn limits(s: &Scenario, tol: f64) -> Result<Report, CliError> {
    let params = s.platoon()?;
    let cfg = FBoundsConfig {
        refine_tol: tol,
        ..FBoundsConfig::default()
    };
    let fb = f_bounds(&cfg)?;
    let lim = covariance_limits(&params, &fb)?;
    let screen = s
        .design_target
        .map(|t| feasibility_screen(t, &lim, &params.risk_spec()))
        .transpose()?;
    let mut csv = String::from("quantity,value\n");
    let rows = [
        ("f_low", fb.f_low),
        ("f_high", fb.f_high),
        ("argmin_s1", fb.argmin.0),
        ("argmin_s2", fb.argmin.1),
        ("argmax_s1", fb.argmax.0),
        ("argmax_s2", fb.argmax.1),
        ("sigma_low", lim.sigma_low),
        ("sigma_high", lim.sigma_high),
        ("diagonal_lo", lim.diagonal.lo),
        ("diagonal_hi", lim.diagonal.hi),
        ("adjacent_lo", lim.adjacent.lo),
        ("adjacent_hi", lim.adjacent.hi),
        ("distant_lo", lim.distant.lo),
        ("distant_hi", lim.distant.hi),
    ];
    for (k, v) in rows {
        let _ = writeln!(csv, "{k},{v}");
    }
    if let Some(sc) = &screen {
        let _ = writeln!(csv, "feasible,{}", sc.feasible);
    }
    let mut json = json!({"f_bounds": fb, "limits": lim});
    if let Some(sc) = screen {
        json["screen"] = to_value(&sc);
    }
    Ok(Report { json, csv })
}

pub struct Simulation {
    pub report: Report,
    pub samples: SampleSet,
}

pub fn simulate(s: &Scenario, seed: Option<u64>) -> Result<Simulation, CliError> {
    let params = s.platoon()?;
    let spec = s
        .simulation
        .as_ref()
        .ok_or_else(|| CliError::Scenario("scenario needs a \"simulation\" block for this command".into()))?;
    let cfg = SimConfig {
        dt: spec.dt.unwrap_or(params.tau / 20.0),
        horizon: spec.horizon,
        burn_in: spec.burn_in,
        trials: spec.trials,
        seed: seed.or(spec.seed).unwrap_or(0),
        stride: spec.stride,
        history: Default::default(),
    };
    let samples = simulate_samples(&s.graph()?, &params, &cfg)?;
    let law = samples.law()?;
    let m = law.mean.len();
    let mut csv = String::from("pair,mean,mean_se");
    for k in 1..=m {
        let _ = write!(csv, ",cov_{k}");
    }
    for k in 1..=m {
        let _ = write!(csv, ",cov_se_{k}");
    }
    csv.push('\n');
    for i in 0..m {
        let _ = write!(csv, "{},{},{}", i + 1, law.mean[i], law.mean_se[i]);
        for k in 0..m {
            let _ = write!(csv, ",{}", law.cov[(i, k)]);
        }
        for k in 0..m {
            let _ = write!(csv, ",{}", law.cov_se[(i, k)]);
        }
        csv.push('\n');
    }
    let json = json!({"config": cfg, "law": law});
    Ok(Simulation {
        report: Report { json, csv },
        samples,
    })
}

#[derive(Serialize)]
struct SweepRun {
    #[serde(skip_serializing_if = "Option::is_none")]
    edge: Option<(usize, usize)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    kg: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    profile: Option<RiskProfile>,
    /// Risk of each pair with nothing observed.
    #[serde(skip_serializing_if = "Option::is_none")]
    single: Option<Vec<RiskValue>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn sweep_run(
    graph: Result<CommGraph, CliError>,
    params: &PlatoonParams,
    s: &Scenario,
    tol: f64,
) -> (Option<RiskProfile>, Option<Vec<RiskValue>>, Option<String>) {
    let run = || -> Result<(RiskProfile, Vec<RiskValue>), CliError> {
        let law = law_for(&graph?, params, tol)?;
        let profile = risk_profile(&law, &s.observations, &params.risk_spec())?;
        Ok((profile, unconditional(&law, params)?))
    };
    match run() {
        Ok((p, u)) => (Some(p), Some(u), None),
        Err(e) => (None, None, Some(e.to_string())),
    }
}

fn sweep_csv(runs: &[SweepRun]) -> String {
    let mut csv = String::from("edge_i,edge_j,kg,pair,state,delta,mu_tilde,sigma_tilde,single_state,single_delta\n");
    for run in runs {
        let (ei, ej) = run.edge.map(|(i, j)| (i.to_string(), j.to_string())).unwrap_or_default();
        let kg = opt(run.kg);
        if let (Some(p), Some(u)) = (&run.profile, &run.single) {
            for e in &p.entries {
                let _ = writeln!(
                    csv,
                    "{ei},{ej},{kg},{},{},{},{},{}",
                    e.pair,
                    risk_cells(e.risk),
                    opt(e.mu_tilde),
                    opt(e.sigma_tilde),
                    risk_cells(u[e.pair - 1])
                );
            }
        }
    }
    csv
}

pub fn sweep_edges(s: &Scenario, tol: f64, add: bool) -> Result<Report, CliError> {
    let params = s.platoon()?;
    let base = s.graph()?;
    let n = params.n;
    let weight = s.sweep.as_ref().and_then(|w| w.weight).unwrap_or(1.0);
    let candidates = match s.sweep.as_ref().and_then(|w| w.candidates.clone()) {
        Some(c) => c,
        None => (1..=n)
            .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
            .filter(|&(i, j)| (base.weight(i, j) == 0.0) == add)
            .collect(),
    };
    let action = if add { EdgeAction::Add(weight) } else { EdgeAction::Remove };
    let baseline = {
        let (profile, single, error) = sweep_run(Ok(base.clone()), &params, s, tol);
        SweepRun {
            edge: None,
            kg: None,
            profile,
            single,
            error,
        }
    };
    if let Some(e) = &baseline.error {
        return Err(CliError::Scenario(format!("baseline graph: {e}")));
    }
    let runs: Vec<SweepRun> = candidates
        .par_iter()
        .map(|&(i, j)| {
            let graph = base.mutate_edge(i, j, action).map_err(CliError::from);
            let (profile, single, error) = sweep_run(graph, &params, s, tol);
            SweepRun {
                edge: Some((i, j)),
                kg: None,
                profile,
                single,
                error,
            }
        })
        .collect();
    let mut all = vec![baseline];
    all.extend(runs);
    let csv = sweep_csv(&all);
    let json = json!({
        "action": if add { "add-edge" } else { "remove-edge" },
        "weight": if add { Some(weight) } else { None },
        "baseline": all[0],
        "links": all[1..],
    });
    Ok(Report { json, csv })
}

pub fn sweep_noise(s: &Scenario, tol: f64, kgs: &[f64]) -> Result<Report, CliError> {
    if kgs.is_empty() {
        return Err(CliError::Scenario("sweep noise needs at least one --kg value".into()));
    }
    let params = s.platoon()?;
    let g = s.scalar_noise()?;
    let graph = s.graph()?;
    let runs: Vec<SweepRun> = kgs
        .par_iter()
        .map(|&kg| {
            let p = params.clone().with_noise(params.sinusoidal_noise(g, kg));
            let (profile, single, error) = match p.validate() {
                Ok(()) => sweep_run(Ok(graph.clone()), &p, s, tol),
                Err(e) => (None, None, Some(e.to_string())),
            };
            SweepRun {
                edge: None,
                kg: Some(kg),
                profile,
                single,
                error,
            }
        })
        .collect();
    let csv = sweep_csv(&runs);
    let json = json!({"g": g, "runs": runs});
    Ok(Report { json, csv })
}
