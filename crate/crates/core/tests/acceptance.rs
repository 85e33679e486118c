//! Acceptance suite for the worked example and the property checks.
//!
//! Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use delaynet::analysis::*;
use delaynet::channel::{autocorrelation, mean_channel, spectral_factor, ChannelSpec};
use delaynet::lti::{h2_norm_sq, is_schur, ss_from_tf, Polynomial, RationalTf, StateSpace};
use delaynet::sim::*;
use delaynet::synthesis::{synthesize, SynthesisResult};
use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn example_loop(kappa: f64) -> StateSpace<f64> {
    nominal_loop(&example_plant(), &example_controller().scale_output(kappa), &example_channel()).unwrap()
}

fn phi() -> Polynomial<f64> {
    spectral_factor(&example_channel()).unwrap().phi
}

fn mean_channel_exact() -> Outcome {
    let h = mean_channel(&example_channel());
    let want = [0.36, 0.12];
    for (i, w) in want.iter().enumerate() {
        ensure((h.coeff(i) - w).abs() <= 1e-15, || format!("h{i} = {}", h.coeff(i)))?;
    }
    ensure(h.coeffs()[2..].iter().all(|c| *c == 0.0), || format!("{:?}", h.coeffs()))?;
    Ok(format!("H = {} + {} z^-1", h.coeff(0), h.coeff(1)))
}

fn spectral_factor_values() -> Outcome {
    let spec = example_channel();
    let f = spectral_factor(&spec).map_err(|e| e.to_string())?;
    let (f0, f1) = (f.phi.coeff(0), f.phi.coeff(1));
    ensure((f0 - 0.3188).abs() <= 5e-5 && (f1 + 0.1355).abs() <= 5e-5, || {
        format!("Phi = {f0} + {f1} z^-1")
    })?;
    let r = autocorrelation(&spec).r;
    let back = f.phi.autocorrelation();
    let err = (0..r.len())
        .map(|l| (back.get(l).copied().unwrap_or(0.0) - r[l]).abs())
        .fold(0.0, f64::max);
    ensure(err <= 1e-10, || format!("roundtrip error {err:e}"))?;
    Ok(format!("Phi = {f0:.6} {f1:+.6} z^-1, roundtrip {err:.1e}"))
}

/// Monic denominator and matching numerator, both in powers of `z^-1`.
fn normalized(tf: &RationalTf<f64>) -> (Vec<f64>, Vec<f64>) {
    let m = tf.monic();
    (m.num().coeffs().to_vec(), m.den().coeffs().to_vec())
}

fn printed_controller() -> RationalTf<f64> {
    // 0.8316 z (z - 1.02) / ((z - 0.2)(z - 0.1668)), divided through by z^2.
    let num = Polynomial::new(vec![0.8316, -0.8316 * 1.02]);
    let den = Polynomial::new(vec![1.0, -0.2]).mul(&Polynomial::new(vec![1.0, -0.1668]));
    RationalTf::new(num, den).unwrap()
}

fn synthesis_values(r: &SynthesisResult<f64>, elapsed: Duration) -> Outcome {
    let (gn, gd) = normalized(&r.k_tf);
    let (wn, wd) = normalized(&printed_controller());
    let diff = |a: &[f64], b: &[f64]| {
        (0..a.len().max(b.len()))
            .map(|i| (a.get(i).unwrap_or(&0.0) - b.get(i).unwrap_or(&0.0)).abs())
            .fold(0.0, f64::max)
    };
    let (dn, dd) = (diff(&gn, &wn), diff(&gd, &wd));
    let j_ok = (r.j_star - 0.1728).abs() <= 1e-3;
    let detail = format!(
        "J* = {:.7}, num diff {dn:.2e}, den diff {dd:.2e}, den = {gd:?}, {:.2} s",
        r.j_star,
        elapsed.as_secs_f64()
    );
    ensure(j_ok && dn <= 5e-3 && dd <= 5e-3 && elapsed < Duration::from_secs(1), || detail.clone())?;
    Ok(detail)
}

fn asymptotic_values() -> Outcome {
    let start = Instant::now();
    let rep = analyze(&example_plant(), &example_controller(), &example_channel(), 1.0).map_err(|e| e.to_string())?;
    let s = rep.sigma_u_inf.ok_or("loop reported not mean-square stable")?;
    ensure((s - 4.84).abs() <= 0.01, || format!("formula {s}"))?;
    let g = example_loop(1.0);
    let run = run_recursion(&g, &example_channel(), 1.0, None).map_err(|e| e.to_string())?;
    let last = run.trace.last();
    ensure((last - 4.84).abs() <= 0.01, || format!("recursion {last}"))?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(5), || format!("took {t:?}"))?;
    Ok(format!(
        "formula {s:.6}, recursion {last:.6} at horizon {}, {:.2} s",
        run.kernels.horizon,
        t.as_secs_f64()
    ))
}

fn boundary() -> Outcome {
    let start = Instant::now();
    let b = stability_boundary(&example_plant(), &example_controller(), &example_channel(), 1.0, 3.0, 1e-5)
        .map_err(|e| e.to_string())?;
    let t = start.elapsed();
    ensure((b - 2.0888).abs() <= 0.01 && t < Duration::from_secs(10), || {
        format!("kappa = {b}, {t:?}")
    })?;
    Ok(format!("kappa = {b:.5}, {:.2} s", t.as_secs_f64()))
}

fn monte_carlo() -> Outcome {
    let start = Instant::now();
    let (p, k, spec) = (example_plant(), example_controller(), example_channel());
    let cfg = SimConfig {
        p: p.clone(),
        k: k.clone(),
        spec: spec.clone(),
        horizon: 400,
        trials: 100_000,
        seed: 1,
        input: InputMode::White { sigma_v_sq: 1.0 },
    };
    let r = estimate_variance(&cfg).map_err(|e| e.to_string())?;
    ensure(r.overflow_trials == 0, || format!("{} overflowing trials", r.overflow_trials))?;
    let mut worst_late: f64 = 0.0;
    for n in 381..=400 {
        let z = (r.var_u.sigma_sq[n] - 4.84) / r.stderr_u[n];
        worst_late = worst_late.max(z.abs());
    }
    let g = nominal_loop(&p, &k, &spec).map_err(|e| e.to_string())?;
    let rec = run_recursion(&g, &spec, 1.0, Some(50)).map_err(|e| e.to_string())?;
    let mut worst_early: f64 = 0.0;
    for n in 0..=50 {
        let (e, a, se) = (r.var_u.sigma_sq[n], rec.trace.sigma_sq[n], r.stderr_u[n]);
        if se == 0.0 {
            ensure(e == a, || format!("k = {n}: {e} vs {a} with zero spread"))?;
        } else {
            worst_early = worst_early.max(((e - a) / se).abs());
        }
    }
    let t = start.elapsed();
    let detail = format!(
        "final-20 max |z| = {worst_late:.2}, k <= 50 max |z| = {worst_early:.2}, var(400) = {:.4}, {:.1} s",
        r.var_u.sigma_sq[400],
        t.as_secs_f64()
    );
    ensure(worst_late <= 3.0 && worst_early <= 4.0 && t < Duration::from_secs(120), || detail.clone())?;
    Ok(detail)
}

/// Random strictly proper stable loop with a channel whose factor exists.
fn random_case(rng: &mut StdRng) -> (StateSpace<f64>, ChannelSpec<f64>) {
    loop {
        let g = random_stable_loop(rng);
        let spec = random_channel(rng, 3);
        if spectral_factor(&spec).is_ok() {
            return (g, spec);
        }
    }
}

fn prop_kernel_sum() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7001);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (g, spec) = random_case(&mut rng);
        let j = small_gain(&g, &spectral_factor(&spec).unwrap().phi).map_err(|e| e.to_string())?.j.unwrap();
        let n = certified_recursion_horizon(&g, &spec).map_err(|e| e.to_string())?;
        let sum: f64 = recursion_kernels(&g, &spec, n).map_err(|e| e.to_string())?.t_hat.iter().sum();
        worst = worst.max((sum - j).abs() / j.max(1.0));
    }
    ensure(worst <= 1e-6, || format!("worst error {worst:e}"))?;
    Ok(format!("worst error {worst:.1e}"))
}

fn prop_resolvent_sum() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7002);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let (g, spec) = random_case(&mut rng);
        let phi = spectral_factor(&spec).unwrap().phi;
        let j0 = small_gain(&g, &phi).unwrap().j.unwrap();
        if j0 == 0.0 {
            continue;
        }
        // Scale the loop so that J lands in (0.05, 0.9).
        let target = rng.random_range(0.05..0.9);
        let g = g.scale_output((target / j0).sqrt());
        let j = small_gain(&g, &phi).unwrap().j.unwrap();
        let n = certified_recursion_horizon(&g, &spec).map_err(|e| e.to_string())?;
        let ker = recursion_kernels(&g, &spec, n).map_err(|e| e.to_string())?;
        let s: f64 = s_hat_sequence(&ker).iter().sum();
        worst = worst.max((s * (1.0 - j) - 1.0).abs());
    }
    ensure(worst <= 1e-6, || format!("worst relative error {worst:e}"))?;
    Ok(format!("worst relative error {worst:.1e}"))
}

fn prop_monotone() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7003);
    for _ in 0..100 {
        let (g, spec) = random_case(&mut rng);
        let sv = rng.random_range(0.1..3.0);
        let run = run_recursion(&g, &spec, sv, Some(300)).map_err(|e| e.to_string())?;
        let s = &run.trace.sigma_sq;
        ensure(s.windows(2).all(|w| w[1] >= w[0]), || "trace decreased".into())?;
    }
    Ok("100 random loops nondecreasing".into())
}

fn prop_divergence() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7004);
    let mut done = 0;
    while done < 20 {
        let (g, spec) = random_case(&mut rng);
        let phi = spectral_factor(&spec).unwrap().phi;
        let j0 = small_gain(&g, &phi).unwrap().j.unwrap();
        if j0 < 1e-6 {
            continue;
        }
        let g = g.scale_output((1.5 / j0).sqrt());
        let ker = recursion_kernels(&g, &spec, 4000).map_err(|e| e.to_string())?;
        let trace = variance_recursion(&ker, &VarianceTrace::constant(1.0, 4000)).map_err(|e| e.to_string())?;
        ensure(trace.divergence_index().is_some(), || format!("no divergence, last {}", trace.last()))?;
        done += 1;
    }
    Ok("20 loops scaled to J = 1.5 diverge within 4000 steps".into())
}

fn d_i(spec: &ChannelSpec<f64>, path: &Path<f64>, i: usize, k: usize) -> f64 {
    if k < i {
        return 0.0;
    }
    let hit = if path.tau[k - i] == i { 1.0 } else { 0.0 };
    spec.weights()[i] * (hit - spec.pmf()[i]) * path.u[k - i]
}

fn prop_moments() -> Outcome {
    let spec = example_channel();
    let (p, a) = (spec.pmf().to_vec(), spec.weights().to_vec());
    let tau = spec.tau();
    let cfg = SimConfig {
        p: example_plant(),
        k: example_controller(),
        spec: spec.clone(),
        horizon: 50,
        trials: 20_000,
        seed: 31,
        input: InputMode::White { sigma_v_sq: 1.0 },
    };
    let paths: Vec<Path<f64>> = (0..cfg.trials as u64).map(|t| simulate_path(&cfg, t).unwrap()).collect();
    let k = 40;
    let mut checks: Vec<(String, Vec<f64>)> = Vec::new();
    for i in 0..=tau {
        let c = a[i] * a[i] * p[i] * (1.0 - p[i]);
        checks.push((
            format!("d{i} variance"),
            paths.iter().map(|q| d_i(&spec, q, i, k).powi(2) - c * q.u[k - i].powi(2)).collect(),
        ));
        checks.push((
            format!("d{i} lag 1"),
            paths.iter().map(|q| d_i(&spec, q, i, k) * d_i(&spec, q, i, k + 1)).collect(),
        ));
        for i2 in i + 1..=tau {
            let c = a[i] * a[i2] * p[i] * p[i2];
            checks.push((
                format!("d{i} d{i2} shared send"),
                paths
                    .iter()
                    .map(|q| d_i(&spec, q, i, k) * d_i(&spec, q, i2, k + i2 - i) + c * q.u[k - i].powi(2))
                    .collect(),
            ));
            checks.push((
                format!("d{i} d{i2} same instant"),
                paths.iter().map(|q| d_i(&spec, q, i, k) * d_i(&spec, q, i2, k)).collect(),
            ));
        }
    }
    checks.push((
        "d variance".into(),
        paths
            .iter()
            .map(|q| {
                let pred: f64 = (0..=tau).map(|i| a[i] * a[i] * p[i] * (1.0 - p[i]) * q.u[k - i].powi(2)).sum();
                q.d[k].powi(2) - pred
            })
            .collect(),
    ));
    for lag in 1..=tau {
        checks.push((
            format!("d lag {lag}"),
            paths
                .iter()
                .map(|q| {
                    let pred: f64 = (0..=tau - lag)
                        .map(|i| -a[i] * a[i + lag] * p[i] * p[i + lag] * q.u[k - i].powi(2))
                        .sum();
                    q.d[k] * q.d[k + lag] - pred
                })
                .collect(),
        ));
    }
    for lag in tau + 1..=tau + 3 {
        checks.push((format!("d lag {lag}"), paths.iter().map(|q| q.d[k] * q.d[k + lag]).collect()));
    }
    for k1 in [k - 3, k, k + 2] {
        checks.push((format!("v({k1}) d({k})"), paths.iter().map(|q| q.v[k1] * q.d[k]).collect()));
    }
    let mut worst: f64 = 0.0;
    for (name, xs) in &checks {
        let (m, se) = mean_se(xs);
        let z = if se == 0.0 { if m == 0.0 { 0.0 } else { f64::INFINITY } } else { m.abs() / se };
        ensure(z <= 4.0, || format!("{name}: |z| = {z:.2}"))?;
        worst = worst.max(z);
    }
    Ok(format!("{} moments, max |z| = {worst:.2}", checks.len()))
}

fn prop_covariance() -> Outcome {
    let run = |kappa: f64| {
        let k = example_controller().scale_output(kappa);
        let n = example_plant().order() + k.order();
        covariance_decay(&SimConfig {
            p: example_plant(),
            k,
            spec: example_channel(),
            horizon: 400,
            trials: 2000,
            seed: 6,
            input: InputMode::ZeroInput { sigma0: DMatrix::identity(n, n) },
        })
        .map_err(|e| e.to_string())
    };
    ensure(run(1.0)?.decaying, || "design does not decay".into())?;
    ensure(!run(2.2)?.decaying, || "kappa = 2.2 decays".into())?;
    Ok("K* decaying, 2.2 K* diverging".into())
}

fn prop_factor() -> Outcome {
    let mut rng = StdRng::seed_from_u64(7005);
    let (mut factored, mut marginal, mut degenerate) = (0, 0, 0);
    for _ in 0..1000 {
        let spec = random_channel(&mut rng, 6);
        let f = match spectral_factor(&spec) {
            Ok(f) => f,
            Err(delaynet::Error::MarginalFactorization { .. }) => {
                marginal += 1;
                continue;
            }
            Err(e) => return Err(e.to_string()),
        };
        let r = autocorrelation(&spec).r;
        if f.degenerate {
            ensure(r[0].abs() < 1e-14, || "degenerate factor of a random channel".into())?;
            degenerate += 1;
            continue;
        }
        let back = f.phi.autocorrelation();
        let scale = r[0].max(1.0);
        for l in 0..r.len() {
            let got = back.get(l).copied().unwrap_or(0.0);
            ensure((got - r[l]).abs() <= 1e-10 * scale, || format!("lag {l}: {got} vs {}", r[l]))?;
        }
        ensure(f.phi.coeff(0) > 0.0, || "negative leading coefficient".into())?;
        for z in f.phi.roots_in_z().map_err(|e| e.to_string())? {
            ensure(z.norm() < 1.0, || format!("root {z} outside the unit disk"))?;
        }
        factored += 1;
    }
    Ok(format!("{factored} factored, {degenerate} single-delay, {marginal} marginal"))
}

fn certificates(r: &SynthesisResult<f64>) -> Result<(), String> {
    ensure(r.x_residual <= 1e-10 && r.y_residual <= 1e-10, || {
        format!("residuals {:e} {:e}", r.x_residual, r.y_residual)
    })?;
    let gp = &r.plant;
    let sx = is_schur(&(&gp.a + &gp.b2 * &r.f)).map_err(|e| e.to_string())?.stable;
    let sy = is_schur(&(&gp.a + &r.l * &gp.c2)).map_err(|e| e.to_string())?.stable;
    ensure(sx && sy && r.loop_radius < 1.0, || "closed loop not Schur".into())
}

fn prop_riccati(example: &SynthesisResult<f64>) -> Outcome {
    certificates(example)?;
    let mut rng = StdRng::seed_from_u64(7006);
    let mut done = 0;
    while done < 40 {
        let order = rng.random_range(1..=3);
        let mut tf = random_tf(&mut rng, order, true);
        if rng.random::<bool>() {
            let den = tf.den().mul(&Polynomial::new(vec![1.0, -1.3]));
            tf = RationalTf::new(tf.num().clone(), den).unwrap();
        }
        let p = ss_from_tf(&tf).unwrap();
        let spec = random_channel(&mut rng, 3);
        match synthesize(&p, &spec) {
            Ok(r) => {
                certificates(&r)?;
                done += 1;
            }
            Err(e) if e.is_solver_failure() || matches!(e, delaynet::Error::MarginalFactorization { .. }) => {}
            Err(e) => return Err(e.to_string()),
        }
    }
    Ok(format!("example design and {done} random designs certified"))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let design = synthesize(&example_plant(), &example_channel());
    let design_time = start.elapsed();
    let design = match design {
        Ok(d) => d,
        Err(e) => {
            println!("FAIL 3 synthesis: {e}");
            return ExitCode::FAILURE;
        }
    };

    let mut failed = 0;
    let mut report = |id: &str, name: &str, out: Outcome| match out {
        Ok(d) => println!("PASS {id} {name}: {d}"),
        Err(d) => {
            failed += 1;
            println!("FAIL {id} {name}: {d}");
        }
    };

    report("1", "mean channel", mean_channel_exact());
    report("2", "spectral factor", spectral_factor_values());
    report("3", "synthesis", synthesis_values(&design, design_time));
    {
        // Not a criterion: the printed controller against the computed one.
        let k = ss_from_tf(&printed_controller()).unwrap();
        let g = nominal_loop(&example_plant(), &k, &example_channel()).unwrap();
        let j = small_gain(&g, &phi()).unwrap().j.unwrap();
        println!(
            "INFO 3 printed controller with a pole at 0.2 has J = {j:.6} > J* = {:.6}; computed poles are 0.1 and {:.5}",
            design.j_star,
            design.k_tf.den().roots_in_z().unwrap().iter().map(|z| z.re).fold(0.0, f64::max)
        );
        let h2 = h2_norm_sq(&example_loop(1.0)).unwrap();
        println!("INFO 4 nominal loop |G|^2 = {h2:.6}");
    }
    report("4", "asymptotic variance", asymptotic_values());
    report("5", "stability boundary", boundary());
    report("6", "monte carlo concordance", monte_carlo());

    let t7 = Instant::now();
    report("7a", "kernel sum equals J", prop_kernel_sum());
    report("7b", "resolvent sum equals 1/(1-J)", prop_resolvent_sum());
    report("7c", "recursion monotone", prop_monotone());
    report("7d", "recursion diverges for J > 1", prop_divergence());
    report("7e", "uncertainty moments", prop_moments());
    report("7f", "covariance decay", prop_covariance());
    report("7g", "spectral factor", prop_factor());
    report("7h", "riccati certificates", prop_riccati(&design));
    let t = t7.elapsed();
    report(
        "7",
        "property suite runtime",
        if t < Duration::from_secs(300) {
            Ok(format!("{:.1} s", t.as_secs_f64()))
        } else {
            Err(format!("{:.1} s", t.as_secs_f64()))
        },
    );

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
