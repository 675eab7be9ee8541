//! Acceptance criteria, one line per criterion. Runs without the libtest
//! harness so the report is printed in order and in full.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use platoon_risk::covariance::{complete_covariance, complete_sigma_c};
use platoon_risk::limits::{
    best_achievable_single, complete_graph_limit, covariance_limits, f_bounds, feasibility_screen, CovSign, FBounds,
    FBoundsConfig,
};
use platoon_risk::risk::{
    classify_complete, complete_graph_risk, complete_moments, conditional_multi, kappa, levelset_risk,
    risk_from_conditional, risk_multi, risk_profile, risk_range, risk_single, CompleteCase, ConditionalGaussian,
    MeanSign, ObservationSet, RiskValue,
};
use platoon_risk::roots::brent;
use platoon_risk::sim::{empirical_conditional, simulate_samples, SimConfig};
use platoon_risk::stability::sbar_s1_max;
use platoon_risk::{
    distance_covariance, platoon_stable, spectral_decomposition, CommGraph, DistanceLaw, EdgeAction, PlatoonParams,
    RiskSpec,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use common::{random_connected_graph, random_stable_scenario, rel_err, rng};

type Outcome = Result<String, String>;

const PAPER_F_LOW: f64 = 25.4603;
const PAPER_F_HIGH: f64 = 3.633e3;

fn bounds() -> &'static (FBounds, Duration) {
    static B: OnceLock<(FBounds, Duration)> = OnceLock::new();
    B.get_or_init(|| {
        let t = Instant::now();
        let b = f_bounds(&FBoundsConfig::default()).expect("f_bounds");
        (b, t.elapsed())
    })
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn law_of(graph: &CommGraph, params: &PlatoonParams) -> DistanceLaw {
    let spec = spectral_decomposition(&graph.laplacian()).unwrap();
    distance_covariance(&spec, params).unwrap()
}

fn kernel_lower_bound() -> Outcome {
    let (b, elapsed) = bounds();
    let err = rel_err(b.f_low, PAPER_F_LOW);
    check(err <= 0.01, || format!("f_low = {:.4} vs {PAPER_F_LOW}, rel err {err:.2e} > 1e-2", b.f_low))?;
    check(elapsed.as_secs_f64() < 120.0, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "f_low = {:.4} at (s1, s2) = ({:.4}, {:.4}), rel err {err:.2e}, {:.1?}",
        b.f_low, b.argmin.0, b.argmin.1, elapsed
    ))
}

fn kernel_upper_bound() -> Outcome {
    let (b, elapsed) = bounds();
    let err = rel_err(b.f_high, PAPER_F_HIGH);
    check(err <= 0.01, || {
        format!(
            "f_high = {:.2} at (s1, s2) = ({:.4}, {:.4}) vs {PAPER_F_HIGH}, rel err {err:.3} > 1e-2",
            b.f_high, b.argmax.0, b.argmax.1
        )
    })?;
    check(elapsed.as_secs_f64() < 120.0, || format!("took {elapsed:?}"))?;
    Ok(format!("f_high = {:.2}, rel err {err:.2e}", b.f_high))
}

fn complete_closed_form() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for n in [5, 20] {
        let params = PlatoonParams::case_study(10.0).with_n(n);
        let law = law_of(&CommGraph::complete(n), &params);
        let sc = complete_sigma_c(&params, 1e-10).map_err(|e| e.to_string())?;
        let closed = complete_covariance(n - 1, sc);
        for i in 0..n - 1 {
            for j in 0..n - 1 {
                let (a, b) = (law.cov()[(i, j)], closed[(i, j)]);
                if b == 0.0 {
                    check(a.abs() <= 1e-14, || format!("n = {n}: sigma_{},{} = {a:e}, expected 0", i + 1, j + 1))?;
                } else {
                    let e = rel_err(a, b);
                    worst = worst.max(e);
                    check(e <= 1e-9, || format!("n = {n}: sigma_{},{} = {a} vs {b}", i + 1, j + 1))?;
                }
            }
        }
    }
    let elapsed = t.elapsed();
    check(elapsed.as_secs_f64() < 1.0, || format!("took {elapsed:?}"))?;
    Ok(format!("worst rel err {worst:.1e}, {elapsed:.1?}"))
}

fn monte_carlo() -> Outcome {
    let t = Instant::now();
    let graph = CommGraph::path(5);
    let params = PlatoonParams::uniform(5, 0.04, 1.0, 2.0, 1.1, 0.1, 0.1);
    let law = law_of(&graph, &params);
    let cfg = SimConfig {
        dt: 0.002,
        horizon: 200.0,
        burn_in: 20.0,
        trials: 200,
        seed: 20_240_601,
        stride: None,
        history: Default::default(),
    };
    let samples = simulate_samples(&graph, &params, &cfg).map_err(|e| e.to_string())?;
    let emp = samples.law().map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in i..4 {
            let z = (emp.cov[(i, j)] - law.cov()[(i, j)]).abs() / emp.cov_se[(i, j)];
            worst = worst.max(z);
            check(z <= 3.0, || {
                format!(
                    "sigma_{},{}: empirical {:.4e} vs analytic {:.4e} is {z:.2} standard errors",
                    i + 1,
                    j + 1,
                    emp.cov[(i, j)],
                    law.cov()[(i, j)]
                )
            })?;
        }
    }

    // slope sign and size for the regression of d_3 on d_2
    let (i, j) = (2, 3);
    let reg = samples.regression(i, j).map_err(|e| e.to_string())?;
    let rho = law.rho(i, j).map_err(|e| e.to_string())?;
    check(reg.slope.signum() == rho.signum(), || format!("slope {} vs rho {rho}", reg.slope))?;
    check((reg.rho - rho).abs() <= 3.0 * reg.rho_se, || {
        format!("rho_hat {} +- {} vs rho {rho}", reg.rho, reg.rho_se)
    })?;

    // conditional mean in a lower-tail window: E[d_j | d_i in W] = r + b (E[d_i | W] - r)
    let si = law.std_dev(i);
    let (d_star, w) = (params.r - 1.5 * si, 0.25 * si);
    let cond = empirical_conditional(&samples, i, j, d_star, w).map_err(|e| e.to_string())?;
    let (mut s, mut k) = (0.0, 0usize);
    for d in samples.trials.iter().flat_map(|t| t.distances.iter()) {
        if (d[i - 1] - d_star).abs() <= w {
            s += d[i - 1];
            k += 1;
        }
    }
    let b = law.sigma(i, j) / law.sigma(i, i);
    let shift = b * (s / k as f64 - params.r);
    let standard = params.r + shift;
    let printed = params.r - shift;
    let z_std = (cond.estimate.mean - standard).abs() / cond.mean_se;
    let z_prt = (cond.estimate.mean - printed).abs() / cond.mean_se;
    check(z_std <= 3.0 && z_prt > 3.0, || {
        format!(
            "window mean {:.5} (se {:.1e}): standard-sign prediction {standard:.5} at {z_std:.1} se, printed {printed:.5} at {z_prt:.1} se",
            cond.estimate.mean, cond.mean_se
        )
    })?;
    let elapsed = t.elapsed();
    check(elapsed.as_secs_f64() < 300.0, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{} snapshots, worst |z| = {worst:.2}, rho_hat = {:.4} (rho = {rho:.4}), window mean at {z_std:.1} se of standard sign vs {z_prt:.0} se of printed, {elapsed:.1?}",
        emp.count, reg.rho
    ))
}

fn kappa_oracle() -> Outcome {
    use statrs::distribution::{Continuous, ContinuousCDF, Normal};
    let nd = Normal::new(0.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for eps in [0.01, 0.05, 0.1, 0.25, 0.5] {
        let k = kappa(eps).map_err(|e| e.to_string())?;
        let oracle = nd.pdf(nd.inverse_cdf(eps)) / eps;
        worst = worst.max((k - oracle).abs());
        check((k - oracle).abs() <= 1e-10, || format!("eps = {eps}: kappa {k} vs {oracle}"))?;
    }
    Ok(format!("max |diff| = {worst:.1e}"))
}

fn theorem3_vs_schur() -> Outcome {
    let n = 20;
    let m = n - 1;
    let params = PlatoonParams::case_study(10.0);
    let sc = complete_sigma_c(&params, 1e-10).map_err(|e| e.to_string())?;
    let law = DistanceLaw::new(params.r, complete_covariance(m, sc)).map_err(|e| e.to_string())?;
    let generic = law_of(&CommGraph::complete(n), &params);
    let spec = params.risk_spec();
    let j = 10;
    let mut configs = 0;
    let (mut worst_var, mut worst_mean): (f64, f64) = (0.0, 0.0);
    for m1 in 0..=6usize {
        for m2 in 0..=6 - m1 {
            for mp in 0..=6 - m1 - m2 {
                if m1 + m2 + mp == 0 {
                    continue;
                }
                let mut set: Vec<usize> = (j - m1..j).chain(j + 1..=j + m2).collect();
                let extras: Vec<usize> = [19, 17, 15, 13, 1, 3, 5, 7]
                    .into_iter()
                    .filter(|&c| c + m1 + 2 <= j || c >= j + m2 + 2)
                    .take(mp)
                    .collect();
                check(extras.len() == mp, || format!("cannot place {mp} extra collisions"))?;
                set.extend(extras);
                let case = classify_complete(&set, j, m).map_err(|e| e.to_string())?;
                let expected = match (m1, m2) {
                    (0, 0) => CompleteCase::Isolated,
                    (a, 0) | (0, a) => CompleteCase::OneSided { m: a },
                    (a, b) => CompleteCase::Surrounded { m1: a, m2: b },
                };
                check(case == expected, || format!("{set:?}: classified {case:?}, expected {expected:?}"))?;
                let closed = complete_moments(case, sc, params.r, MeanSign::Standard).map_err(|e| e.to_string())?;
                let obs = ObservationSet::exact_all(&set, 0.0).map_err(|e| e.to_string())?;
                let schur = conditional_multi(&law, &obs, j).map_err(|e| e.to_string())?;
                let ev = rel_err(closed.variance(), schur.variance());
                let em = rel_err(closed.mean, schur.mean);
                worst_var = worst_var.max(ev);
                worst_mean = worst_mean.max(em);
                check(ev <= 1e-10, || {
                    format!("(m', m1, m2) = ({mp}, {m1}, {m2}): variance {} vs {}", closed.variance(), schur.variance())
                })?;
                check(em <= 1e-10, || {
                    format!("(m', m1, m2) = ({mp}, {m1}, {m2}): mean {} vs {}", closed.mean, schur.mean)
                })?;
                if case == CompleteCase::Isolated {
                    let closed_risk =
                        complete_graph_risk(&params, case, 1e-10, MeanSign::Standard).map_err(|e| e.to_string())?;
                    let unconditional = risk_from_conditional(
                        &ConditionalGaussian::new(params.r, law.std_dev(j)).map_err(|e| e.to_string())?,
                        &spec,
                    )
                    .map_err(|e| e.to_string())?;
                    check(closed_risk == unconditional, || {
                        format!("{set:?}: isolated risk {closed_risk} != unconditional {unconditional}")
                    })?;
                    let pipeline = risk_multi(&generic, &obs, j, &spec).map_err(|e| e.to_string())?;
                    check(same_risk(pipeline, unconditional, 1e-10), || {
                        format!("{set:?}: pipeline risk {pipeline} vs unconditional {unconditional}")
                    })?;
                }
                configs += 1;
            }
        }
    }
    Ok(format!(
        "{configs} configurations, worst rel err variance {worst_var:.1e}, mean {worst_mean:.1e}"
    ))
}

fn same_risk(a: RiskValue, b: RiskValue, tol: f64) -> bool {
    match (a, b) {
        (RiskValue::Finite(x), RiskValue::Finite(y)) => (x - y).abs() <= tol * x.abs().max(1.0),
        _ => a == b,
    }
}

fn reductions() -> Outcome {
    let mut r = rng(6);
    let mut finite = 0;
    let mut worst: f64 = 0.0;
    for s in 0..100 {
        let target = r.random_range(0.05..0.6);
        let sc = random_stable_scenario(&mut r, 12, target);
        let law = distance_covariance(&sc.spectrum, &sc.params).map_err(|e| e.to_string())?;
        let m = law.n_pairs();
        let i = r.random_range(1..=m);
        let j = loop {
            let j = r.random_range(1..=m);
            if j != i {
                break j;
            }
        };
        let d_star = r.random_range(0.0..sc.params.r);
        let spec = sc.params.risk_spec();
        let single = risk_single(&law, i, j, d_star, &spec).map_err(|e| e.to_string())?;
        let obs = ObservationSet::exact_all(&[i], d_star).map_err(|e| e.to_string())?;
        let multi = risk_multi(&law, &obs, j, &spec).map_err(|e| e.to_string())?;
        if let (RiskValue::Finite(a), RiskValue::Finite(b)) = (single, multi) {
            finite += 1;
            worst = worst.max((a - b).abs());
        }
        check(same_risk(single, multi, 1e-10), || {
            format!("scenario {s} (n = {}, i = {i}, j = {j}): single {single} vs multi {multi}", sc.params.n)
        })?;
    }
    check(finite >= 20, || format!("only {finite} of 100 scenarios gave finite risks"))?;

    // complete graph: generic single-observation risk against the closed form
    for n in [5, 12, 20] {
        for g in [8.0, 10.0, 14.0] {
            let params = PlatoonParams::case_study(g).with_n(n);
            let law = law_of(&CommGraph::complete(n), &params);
            let spec = params.risk_spec();
            let single = risk_single(&law, 2, 3, 0.0, &spec).map_err(|e| e.to_string())?;
            let closed = complete_graph_risk(&params, CompleteCase::OneSided { m: 1 }, 1e-10, MeanSign::Standard)
                .map_err(|e| e.to_string())?;
            check(same_risk(single, closed, 1e-10), || {
                format!("complete({n}), g = {g}: pipeline {single} vs closed form {closed}")
            })?;
        }
    }

    // distant pairs on the complete graph reduce to the zero-covariance bound
    let (fb, _) = bounds();
    for g in [0.5, 5.0, 10.0, 20.0, 40.0] {
        for eps in [0.01, 0.1, 0.3] {
            let mut params = PlatoonParams::case_study(g);
            params.epsilon = eps;
            let spec = params.risk_spec();
            let lim = covariance_limits(&params, fb).map_err(|e| e.to_string())?;
            let corollary = complete_graph_limit(3, 7, 0.0, &lim, &spec).map_err(|e| e.to_string())?;
            let a0 = feasibility_screen(0.5, &lim, &spec).map_err(|e| e.to_string())?.a_zero;
            let direct = best_achievable_single(CovSign::Zero, &lim, &spec).map_err(|e| e.to_string())?;
            check(corollary == a0 && a0 == direct, || {
                format!("g = {g}, eps = {eps}: corollary {corollary} vs A0 {a0} vs {direct}")
            })?;
        }
    }
    Ok(format!("100 scenarios ({finite} finite), worst |diff| {worst:.1e}; complete-graph and A0 reductions exact"))
}

fn bound_containment() -> Outcome {
    let (fb, _) = bounds();
    let mut r = rng(7);
    let mut accepted = 0;
    let mut entries = 0usize;
    let mut attempts = 0usize;
    while accepted < 200 {
        attempts += 1;
        check(attempts < 200_000, || format!("only {accepted} admissible graphs found"))?;
        let n = r.random_range(3..=15);
        let p = r.random_range(0.3..=1.0);
        let graph = random_connected_graph(&mut r, n, p, (0.5, 1.5));
        let spectrum = spectral_decomposition(&graph.laplacian()).map_err(|e| e.to_string())?;
        let ev = spectrum.eigenvalues();
        let (l2, lmax) = (ev[1], ev[n - 1]);
        let s2 = r.random_range(0.1..=0.9);
        let s1_hi = sbar_s1_max(s2).map_err(|e| e.to_string())?;
        let (tau_lo, tau_hi) = (0.1 / l2, s1_hi / lmax);
        if tau_lo > tau_hi {
            continue;
        }
        let tau = r.random_range(tau_lo..=tau_hi);
        let beta = s2 / tau;
        let verdict = platoon_stable(&spectrum, tau, beta);
        if !(verdict.stable && verdict.all_in_sbar()) {
            continue;
        }
        let g = r.random_range(0.1..10.0);
        let params = PlatoonParams::uniform(n, tau, beta, 2.0, 1.1, 0.1, g);
        let law = distance_covariance(&spectrum, &params).map_err(|e| e.to_string())?;
        let lim = covariance_limits(&params, fb).map_err(|e| e.to_string())?;
        for i in 1..n {
            for j in i..n {
                let b = lim.bound_for(i, j);
                let s = law.sigma(i, j);
                check(b.contains(s), || {
                    format!("graph {accepted} (n = {n}): sigma_{i},{j} = {s:e} outside [{:e}, {:e}]", b.lo, b.hi)
                })?;
                entries += 1;
            }
        }
        accepted += 1;
    }
    Ok(format!("200 graphs ({attempts} drawn), {entries} entries inside their bounds"))
}

fn solve_eps(target_kappa: f64) -> Result<f64, String> {
    brent(
        |e| kappa(e).map(|k| k.ln() - target_kappa.ln()).unwrap_or(f64::NAN),
        1e-200,
        1.0 - 1e-12,
        1e-300,
        500,
    )
    .map_err(|e| e.to_string())
}

fn branch_flips() -> Outcome {
    // ties need r/c to be representable
    check(levelset_risk(2.0, 2.5, 1.25) == RiskValue::Zero, || "avar = r/c is not Zero".into())?;
    match levelset_risk(2.0_f64.next_down(), 2.5, 1.25) {
        RiskValue::Finite(d) if d > 0.0 && d < 1e-14 => {}
        other => return Err(format!("just below r/c: {other}")),
    }
    let (r, c) = (2.0, 1.1);
    let threshold = r / c;
    check(levelset_risk(0.0, r, c) == RiskValue::Infinite, || "avar = 0 is not Infinite".into())?;
    match levelset_risk(threshold.next_down(), r, c) {
        RiskValue::Finite(d) if d > 0.0 && d < 1e-14 => {}
        other => return Err(format!("just below r/c: {other}")),
    }
    match levelset_risk(f64::MIN_POSITIVE, r, c) {
        RiskValue::Finite(d) if d > 1e300 => {}
        other => return Err(format!("just above 0: {other}")),
    }

    let mut rr = rng(8);
    for s in 0..5 {
        let mu = rr.random_range(1.95..3.0);
        let sd = rr.random_range(0.2..1.0);
        let cg = ConditionalGaussian::new(mu, sd).map_err(|e| e.to_string())?;
        let risk_at = |eps: f64| risk_from_conditional(&cg, &RiskSpec { epsilon: eps, r, c });
        let eps_zero = solve_eps((mu - threshold) / sd)?;
        let eps_inf = solve_eps(mu / sd)?;
        check(eps_inf < eps_zero, || format!("scenario {s}: thresholds out of order"))?;

        // Zero above eps_zero, Finite(delta) -> 0+ below
        let above = risk_at(eps_zero * (1.0 + 1e-9)).map_err(|e| e.to_string())?;
        check(above == RiskValue::Zero, || format!("scenario {s}: above the Zero threshold got {above}"))?;
        let mut last = f64::INFINITY;
        for h in [1e-2, 1e-4, 1e-6, 1e-8] {
            match risk_at(eps_zero * (1.0 - h)).map_err(|e| e.to_string())? {
                RiskValue::Finite(d) if d > 0.0 && d < last => last = d,
                other => return Err(format!("scenario {s}: eps_zero (1 - {h:e}) gave {other} after {last}")),
            }
        }
        check(last < 1e-6, || format!("scenario {s}: delta does not vanish at the Zero threshold ({last:e})"))?;

        // Infinite below eps_inf, Finite just above
        let below = risk_at(eps_inf * (1.0 - 1e-9)).map_err(|e| e.to_string())?;
        check(below == RiskValue::Infinite, || format!("scenario {s}: below the Infinite threshold got {below}"))?;
        match risk_at(eps_inf * (1.0 + 1e-6)).map_err(|e| e.to_string())? {
            RiskValue::Finite(d) if d > 1e3 => {}
            other => return Err(format!("scenario {s}: just above the Infinite threshold got {other}")),
        }
    }
    Ok("boundary ties and 5 epsilon sweeps flip where expected, delta -> 0+ at the Zero edge".into())
}

fn mc_range_avar(law: &DistanceLaw, i: usize, j: usize, d_star: f64, eps: f64, kept: usize, seed: u64) -> f64 {
    let (si, sj) = (law.std_dev(i), law.std_dev(j));
    let rho = law.rho(i, j).unwrap();
    let r = law.r();
    let q = (1.0 - rho * rho).sqrt();
    let mut g = rng(seed);
    let mut xs = Vec::with_capacity(kept);
    while xs.len() < kept {
        let z1: f64 = StandardNormal.sample(&mut g);
        let z2: f64 = StandardNormal.sample(&mut g);
        if r + si * z1 < d_star {
            xs.push(r + sj * (rho * z1 + q * z2));
        }
    }
    let k = (eps * kept as f64).round() as usize;
    let (lower, pivot, _) = xs.select_nth_unstable_by(k - 1, f64::total_cmp);
    (lower.iter().sum::<f64>() + *pivot) / k as f64
}

fn range_oracle() -> Outcome {
    let mut r = rng(9);
    let spec = RiskSpec { epsilon: 0.1, r: 2.0, c: 1.1 };
    let kept = 4_000_000;
    let mut done = 0;
    let mut report = Vec::new();
    let mut worst: f64 = 0.0;
    while done < 5 {
        let si = r.random_range(0.3..0.8);
        let sj = r.random_range(0.3..0.8);
        let rho = r.random_range(-0.9..0.9);
        let delta = r.random_range(0.0..0.8);
        let d_star = spec.r / (delta + spec.c);
        if (d_star - spec.r) / si < -1.6 {
            continue;
        }
        let cov = DMatrix::from_row_slice(2, 2, &[si * si, rho * si * sj, rho * si * sj, sj * sj]);
        let law = DistanceLaw::new(spec.r, cov).map_err(|e| e.to_string())?;
        let analytic = match risk_range(&law, 1, 2, delta, &spec).map_err(|e| e.to_string())? {
            RiskValue::Finite(d) if d >= 0.2 => d,
            _ => continue,
        };
        let avar = mc_range_avar(&law, 1, 2, d_star, spec.epsilon, kept, 900 + done as u64);
        let mc = match levelset_risk(avar, spec.r, spec.c) {
            RiskValue::Finite(d) => d,
            other => return Err(format!("Monte Carlo risk {other} against analytic Finite({analytic})")),
        };
        let e = rel_err(analytic, mc);
        worst = worst.max(e);
        check(e <= 0.02, || {
            format!("sigma = ({si:.3}, {sj:.3}), rho = {rho:.3}, delta* = {delta:.3}: analytic {analytic:.5} vs MC {mc:.5}")
        })?;
        report.push(format!("{analytic:.3}"));
        done += 1;
    }
    Ok(format!("5 scenarios, risks [{}], worst rel err {worst:.1e}", report.join(", ")))
}

fn qualitative_profiles() -> Outcome {
    // risk rises toward the failed pair on the path graph
    let params = PlatoonParams::case_study(0.1);
    let spec = params.risk_spec();
    let law = law_of(&CommGraph::path(20), &params);
    let mid = 10;
    let obs = ObservationSet::exact_all(&[mid], 0.0).map_err(|e| e.to_string())?;
    let prof = risk_profile(&law, &obs, &spec).map_err(|e| e.to_string())?;
    let risk = |j: usize| prof.get(j).unwrap().risk;
    for j in 1..mid - 1 {
        check(risk(j) < risk(j + 1), || format!("path: risk({j}) = {} !< risk({}) = {}", risk(j), j + 1, risk(j + 1)))?;
    }
    for j in mid + 1..19 {
        check(risk(j) > risk(j + 1), || format!("path: risk({j}) = {} !> risk({}) = {}", risk(j), j + 1, risk(j + 1)))?;
    }

    // complete graph: distant pairs keep the unconditional risk, neighbours of the failure group drop
    let params = PlatoonParams::case_study(10.0);
    let spec = params.risk_spec();
    let base = CommGraph::complete(20);
    let law = law_of(&base, &params);
    let unconditional = |law: &DistanceLaw, j: usize| {
        risk_from_conditional(&ConditionalGaussian::new(params.r, law.std_dev(j)).unwrap(), &spec).unwrap()
    };
    for set in [vec![10], vec![8, 9, 10, 11, 12]] {
        let obs = ObservationSet::exact_all(&set, 0.0).map_err(|e| e.to_string())?;
        let prof = risk_profile(&law, &obs, &spec).map_err(|e| e.to_string())?;
        let (lo, hi) = (set[0], set[set.len() - 1]);
        for e in prof.entries.iter().filter(|e| !e.observed) {
            let u = unconditional(&law, e.pair);
            if e.pair + 1 == lo || e.pair == hi + 1 {
                check(e.risk < u, || format!("complete {set:?}: neighbour {} risk {} !< {u}", e.pair, e.risk))?;
            } else {
                check(same_risk(e.risk, u, 1e-9), || {
                    format!("complete {set:?}: pair {} risk {} != unconditional {u}", e.pair, e.risk)
                })?;
            }
        }
    }

    // removing one edge from the complete graph only moves the pairs touching its end vertices
    let obs = ObservationSet::exact_all(&[mid], 0.0).map_err(|e| e.to_string())?;
    let base_prof = risk_profile(&law, &obs, &spec).map_err(|e| e.to_string())?;
    let increment = |a: RiskValue, b: RiskValue| match (a, b) {
        (RiskValue::Finite(x), RiskValue::Finite(y)) => Ok(x - y),
        _ if a == b => Ok(0.0),
        _ => Err(format!("state change {b} -> {a}")),
    };
    let mut common: Option<f64> = None;
    let mut removals = 0;
    for a in 1..=20usize {
        for b in a + 1..=20 {
            let g = base.mutate_edge(a, b, EdgeAction::Remove).map_err(|e| e.to_string())?;
            let l = law_of(&g, &params);
            let incident: Vec<usize> = [a.wrapping_sub(1), a, b - 1, b].into_iter().filter(|&p| p >= 1 && p <= 19).collect();
            let prof = risk_profile(&l, &obs, &spec).map_err(|e| e.to_string())?;
            // an edge at a vehicle of the failed pair couples the failure to the other end
            let touches_failure = [a, b].iter().any(|&v| v == mid || v == mid + 1);
            for j in 1..=19 {
                let single = increment(unconditional(&l, j), unconditional(&law, j))?;
                let cascade = if j == mid { 0.0 } else { increment(prof.get(j).unwrap().risk, base_prof.get(j).unwrap().risk)? };
                let touched = incident.contains(&j);
                for (what, d) in [("single", single), ("cascade", cascade)] {
                    if !touched {
                        check(d.abs() <= 1e-10, || format!("remove ({a},{b}): {what} risk of pair {j} moved by {d:e}"))?;
                    } else if b - a >= 2 && d.abs() > 1e-10 && (what == "single" || !touches_failure) {
                        let c = *common.get_or_insert(d);
                        check(rel_err(d, c) <= 1e-8, || {
                            format!("remove ({a},{b}): {what} increment {d} at pair {j} differs from {c}")
                        })?;
                    }
                }
                if touched && b - a >= 2 {
                    check(single > 0.0, || format!("remove ({a},{b}): single risk of incident pair {j} did not rise"))?;
                }
            }
            removals += 1;
        }
    }
    Ok(format!(
        "path profile monotone, complete-graph invariance holds, {removals} edge removals local with common increment {:.5}",
        common.unwrap_or(f64::NAN)
    ))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 11] = [
        ("1a", "kernel lower bound", kernel_lower_bound),
        ("1b", "kernel upper bound", kernel_upper_bound),
        ("2", "complete-graph closed form", complete_closed_form),
        ("3", "Monte Carlo oracle", monte_carlo),
        ("4", "kappa oracle", kappa_oracle),
        ("5", "complete-graph conditioning vs Schur complement", theorem3_vs_schur),
        ("6", "reductions", reductions),
        ("7", "covariance bound containment", bound_containment),
        ("8", "branch correctness", branch_flips),
        ("9", "range-risk oracle", range_oracle),
        ("10", "qualitative profile checks", qualitative_profiles),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {detail}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
