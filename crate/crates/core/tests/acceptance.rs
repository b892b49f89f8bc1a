//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line each; exits nonzero if any criterion fails.

use fbm_euler::analysis::stats::{ks_two_sample, MeanEstimate};
use fbm_euler::analysis::{
    euler_limit_experiment, fit_rate, mixed_second_moment_quadrature, qv_second_moment_exact,
    strong_error_experiments, weak_error_experiment, LadderSpec, MixedSampler, Payoff, RateReport,
};
use fbm_euler::cli::{parse_config, run_with_threads, ExperimentKind};
use fbm_euler::fbm::{
    increment_covariance, BundleSampler, BundleShape, CholeskySampler, CirculantSampler,
    HurstParam, SamplerMethod,
};
use fbm_euler::model::{
    builtin_model, correction_field, doss_flow, BuiltinModel, Coefficients, Smoothness,
    VectorFieldModel, DEFAULT_ODE_TOL,
};
use fbm_euler::rng::StreamKey;
use fbm_euler::solver::{euler_classical, euler_modified, solve, SchemeKind};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

type Outcome = (bool, String);

fn hurst(h: f64) -> HurstParam {
    HurstParam::new(h).unwrap()
}

fn dyadic(lo: usize, hi: usize) -> Vec<usize> {
    std::iter::successors(Some(lo), |&n| Some(n * 2))
        .take_while(|&n| n <= hi)
        .collect()
}

fn slope_within(report: &RateReport, target: f64, tol: f64) -> Outcome {
    let s = report.fit.slope;
    (
        (s - target).abs() <= tol,
        format!("slope {s:.4}, target {target} ± {tol}"),
    )
}

fn strong_pair(h: f64) -> Vec<RateReport> {
    let model = builtin_model("sine1d").unwrap();
    let spec = LadderSpec::new(hurst(h), dyadic(64, 4096), 512, 42);
    strong_error_experiments(
        &model,
        &[SchemeKind::ModifiedEuler, SchemeKind::ClassicalEuler],
        &spec,
    )
    .unwrap()
}

fn criterion_4(modified: &RateReport, classical: &RateReport) -> Outcome {
    let mut ok = true;
    let mut worst = f64::INFINITY;
    for (i, &n) in modified.n_values.iter().enumerate() {
        if n >= 256 {
            let gap = classical.errors[i] - modified.errors[i];
            worst = worst.min(gap);
            ok &= gap > 0.0;
        }
    }
    (
        ok,
        format!("smallest classical - modified gap for n >= 256: {worst:.3e}"),
    )
}

fn criterion_5() -> Outcome {
    let model = builtin_model("gfbm1d").unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for h in [0.6, 0.8] {
        let spec = LadderSpec::new(hurst(h), dyadic(64, 2048), 4096, 42);
        let r = weak_error_experiment(&model, SchemeKind::ModifiedEuler, Payoff::Identity, &spec)
            .unwrap();
        let exact = r.exact_mean.unwrap();
        let slope = r.report.fit.slope;
        let scaled: Vec<f64> = r.report.n_values[2..]
            .iter()
            .zip(&r.report.errors[2..])
            .map(|(&n, &e)| n as f64 * e)
            .collect();
        let hi = scaled.iter().cloned().fold(f64::MIN, f64::max);
        let lo = scaled.iter().cloned().fold(f64::MAX, f64::min);
        ok &= (slope + 1.0).abs() <= 0.25 && hi < 2.0 * lo && (exact - 0.5f64.exp()).abs() < 1e-12;
        detail.push(format!(
            "H={h}: slope {slope:.4}, n|bias| ratio {:.3}",
            hi / lo
        ));
    }
    (ok, detail.join("; "))
}

/// Closed-form limit `X_1/2` for geometric fBm against the rescaled error.
fn closed_form_deviation(n: usize) -> f64 {
    let model = builtin_model("gfbm1d").unwrap();
    let h = hurst(0.75);
    let sampler = BundleSampler::new(
        BundleShape {
            n_coarse: n,
            refine: 1,
            components: 1,
            hurst: h,
            horizon: 1.0,
        },
        SamplerMethod::Circulant,
    )
    .unwrap();
    let grid = fbm_euler::fbm::Grid::new(1.0, n).unwrap();
    let paths = 256;
    let total: f64 = (0..paths)
        .map(|p| {
            let b = sampler.sample(42, p);
            let x_ref = b.coarse_values(0)[n].exp();
            let x_n = euler_classical(&model, &grid, &b.noise_on(n).unwrap()).unwrap();
            let rescaled = (n as f64).sqrt() * (x_ref - x_n.terminal()[0]);
            let limit = 0.5 * x_ref;
            (rescaled - limit).abs() / (limit.abs() + 1e-8)
        })
        .sum();
    total / paths as f64
}

fn criterion_6() -> Outcome {
    let dev_256 = closed_form_deviation(256);
    let dev_1024 = closed_form_deviation(1024);
    let model = builtin_model("gfbm1d").unwrap();
    let functional = euler_limit_experiment(&model, hurst(0.75), 1.0, 1024, 256, 64, 42).unwrap();
    let ok = dev_1024 < 0.15 && dev_1024 < dev_256 && functional.mean_deviation < 0.15;
    (
        ok,
        format!(
            "closed-form deviation {dev_256:.4} (n=256) -> {dev_1024:.4} (n=1024); \
             flow functional deviation {:.4}",
            functional.mean_deviation
        ),
    )
}

fn criterion_7() -> Outcome {
    let fit = |h: f64| {
        let pts: Vec<(f64, f64)> = dyadic(16, 4096)
            .into_iter()
            .map(|n| (n as f64, qv_second_moment_exact(n, hurst(h), 1.0)))
            .collect();
        fit_rate(&pts).unwrap().slope
    };
    let (s6, s85) = (fit(0.6), fit(0.85));
    let spot = qv_second_moment_exact(2, hurst(0.75), 1.0);
    let ok =
        (s6 + 1.4).abs() <= 0.05 && (s85 + 2.0).abs() <= 0.10 && (spot - 0.585_786_4).abs() <= 1e-6;
    (
        ok,
        format!("slope {s6:.4} (H=0.6), {s85:.4} (H=0.85); E[V^2](n=2, H=0.75) = {spot:.7}"),
    )
}

fn criterion_8() -> Outcome {
    let pts: Vec<(f64, f64)> = dyadic(8, 256)
        .into_iter()
        .map(|n| {
            (
                n as f64,
                mixed_second_moment_quadrature(n, hurst(0.6), 1.0).unwrap(),
            )
        })
        .collect();
    let slope = fit_rate(&pts).unwrap().slope;
    let oracle = mixed_second_moment_quadrature(16, hurst(0.6), 1.0).unwrap();
    let sampler = MixedSampler::new(16, 32, hurst(0.6), 1.0).unwrap();
    let squares: Vec<f64> = (0..10_000).map(|p| sampler.sample(42, p).powi(2)).collect();
    let mc = MeanEstimate::from_samples(&squares);
    let z = mc.z_score(oracle);
    (
        (slope + 1.4).abs() <= 0.08 && z <= 4.0,
        format!(
            "slope {slope:.4}; MC {:.5e} ± {:.1e} vs quadrature {oracle:.5e} ({z:.2} SE)",
            mc.mean, mc.stderr
        ),
    )
}

fn criterion_9() -> Outcome {
    let n = 64;
    let draws = 100_000u64;
    let mut ok = true;
    let mut worst = 0.0f64;
    for h in [0.6, 0.75, 0.9] {
        let sampler = CholeskySampler::new(n, hurst(h), 1.0).unwrap();
        let mut per_lag: Vec<Vec<f64>> =
            (0..5).map(|_| Vec::with_capacity(draws as usize)).collect();
        for p in 0..draws {
            let x = sampler.sample(&mut StreamKey::new(9, p, 0).open(0));
            for (lag, v) in per_lag.iter_mut().enumerate() {
                let s: f64 = (0..n - lag).map(|k| x[k] * x[k + lag]).sum();
                v.push(s / (n - lag) as f64);
            }
        }
        for (lag, v) in per_lag.iter().enumerate() {
            let z = MeanEstimate::from_samples(v).z_score(increment_covariance(
                lag as i64,
                n,
                hurst(h),
                1.0,
            ));
            worst = worst.max(z);
            ok &= z <= 4.0;
        }
    }
    let h = hurst(0.7);
    let chol = CholeskySampler::new(n, h, 1.0).unwrap();
    let circ = CirculantSampler::new(n, h, 1.0).unwrap();
    let a: Vec<f64> = (0..20_000)
        .map(|p| {
            chol.sample(&mut StreamKey::new(1, p, 0).open(0))
                .iter()
                .sum()
        })
        .collect();
    let b: Vec<f64> = (0..20_000)
        .map(|p| {
            circ.sample(&mut StreamKey::new(2, p, 0).open(0))
                .iter()
                .sum()
        })
        .collect();
    let ks = ks_two_sample(&a, &b);
    ok &= ks.p_value > 0.01;
    (
        ok,
        format!(
            "largest covariance z {worst:.2}; KS on B_T p = {:.3}",
            ks.p_value
        ),
    )
}

struct Additive;

impl Coefficients for Additive {
    fn sigma(&self, _x: &[f64], j: usize, out: &mut [f64]) {
        out[0] = 0.7 + j as f64;
        out[1] = -0.3;
    }
    fn grad_sigma(&self, _x: &[f64], _j: usize, out: &mut [f64]) {
        out.fill(0.0);
    }
}

fn criterion_10() -> Outcome {
    let mut failures = Vec::new();
    let h = hurst(0.7);
    let n = 2048;
    let grid = fbm_euler::fbm::Grid::new(1.0, n).unwrap();
    let bundle = fbm_euler::fbm::sample_bundle(n, 1, 2, h, 1.0, 3, 0).unwrap();
    let noise = bundle.noise_on(n).unwrap();

    // exactness for constant sigma
    let additive = VectorFieldModel::new(
        "additive",
        2,
        vec![0.5, -1.0],
        Smoothness::CbInfinity,
        true,
        Arc::new(Additive),
    );
    for kind in [SchemeKind::ClassicalEuler, SchemeKind::ModifiedEuler] {
        let x = solve(kind, &additive, &grid, &noise, h).unwrap();
        let b0 = bundle.coarse_values(0);
        let b1 = bundle.coarse_values(1);
        for k in 0..=n {
            let exact = [
                0.5 + 0.7 * b0[k] + 1.7 * b1[k],
                -1.0 - 0.3 * b0[k] - 0.3 * b1[k],
            ];
            for i in 0..2 {
                if (x.state(k)[i] - exact[i]).abs() > 1e-12 * exact[i].abs().max(1.0) {
                    failures.push(format!("{kind} not exact at step {k}"));
                }
            }
        }
    }

    // adaptedness: perturbing increments from k on leaves states 0..=k unchanged
    let model = builtin_model("tanh2d_cross").unwrap();
    let base = euler_modified(&model, &grid, &noise, h).unwrap();
    let k = 700;
    let mut bumped = noise.clone();
    for comp in bumped.iter_mut() {
        for v in comp[k..].iter_mut() {
            *v += 0.25;
        }
    }
    let moved = euler_modified(&model, &grid, &bumped, h).unwrap();
    if (0..=k).any(|i| {
        base.state(i)
            .iter()
            .zip(moved.state(i))
            .any(|(a, b)| a.to_bits() != b.to_bits())
    }) {
        failures.push("adaptedness".into());
    }

    // step difference equals the correction term
    let classical = euler_classical(&model, &grid, &noise).unwrap();
    let step = grid.step().powf(2.0 * h.value());
    for i in 0..2 {
        let a = base.state(1)[i];
        let b = classical.state(1)[i];
        let c: f64 = (0..2)
            .map(|j| 0.5 * correction_field(&model, model.initial(), j)[i] * step)
            .sum();
        if ((a - b) - c).abs() > 4.0 * f64::EPSILON * (a.abs() + b.abs()) {
            failures.push("step difference".into());
        }
    }

    // Jacobians against central differences
    for m in BuiltinModel::ALL {
        let model = m.build();
        let d = model.dim();
        for p in 0..50 {
            let x: Vec<f64> = (0..d)
                .map(|i| ((p * 7 + i * 3) as f64 * 0.37).sin() * 2.0)
                .collect();
            for j in 0..model.drivers() {
                let jac = model.grad_sigma(&x, j);
                for k in 0..d {
                    let mut up = x.clone();
                    let mut dn = x.clone();
                    up[k] += 1e-5;
                    dn[k] -= 1e-5;
                    let (su, sd) = (model.sigma(&up, j), model.sigma(&dn, j));
                    for i in 0..d {
                        let fd = (su[i] - sd[i]) / 2e-5;
                        if (fd - jac[i * d + k]).abs() > 1e-6 * (1.0 + fd.abs()) {
                            failures.push(format!("jacobian of {}", model.name()));
                        }
                    }
                }
            }
        }
    }

    // Doss flow against exp(b)
    let gfbm = builtin_model("gfbm1d").unwrap();
    for b in [-1.5, -0.2, 0.5, 1.0, 2.0] {
        let v = doss_flow(&gfbm, 1.0, b, DEFAULT_ODE_TOL).unwrap();
        if (v - f64::exp(b)).abs() > 10.0 * DEFAULT_ODE_TOL * f64::exp(b).max(1.0) {
            failures.push(format!("doss at b={b}"));
        }
    }

    // byte-identical CSV at 1 and 8 workers
    let dir = tempfile::tempdir().unwrap();
    let text = "model = tanh2d_cross\nn_ladder = 16,32,64\nM = 150\nr = 4\n";
    let mut cfg = parse_config(text, ExperimentKind::StrongRate).unwrap();
    cfg.output = "one.csv".into();
    let a = run_with_threads(&cfg, Some(dir.path()), 1).unwrap();
    cfg.output = "eight.csv".into();
    let b = run_with_threads(&cfg, Some(dir.path()), 8).unwrap();
    let strip = |p: &std::path::Path| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# output"))
            .map(String::from)
            .collect()
    };
    if strip(&a.csv) != strip(&b.csv) {
        failures.push("csv differs between 1 and 8 workers".into());
    }

    failures.dedup();
    (
        failures.is_empty(),
        if failures.is_empty() {
            "exactness, adaptedness, step difference, jacobians, Doss, reproducibility".into()
        } else {
            failures.join(", ")
        },
    )
}

fn main() -> ExitCode {
    // libtest passes flags such as --nocapture or a name filter; none apply here
    let mut results: Vec<(usize, &str, Outcome, f64)> = Vec::new();
    let mut record = |id: usize, name: &'static str, f: &dyn Fn() -> Outcome| {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        println!(
            "criterion {id:>2} [{}] {name}: {} ({secs:.1}s)",
            if outcome.0 { "PASS" } else { "FAIL" },
            outcome.1
        );
        results.push((id, name, outcome, secs));
    };

    let t = Instant::now();
    let pair_06 = strong_pair(0.6);
    let pair_085 = strong_pair(0.85);
    println!(
        "(strong-rate ladders computed in {:.1}s)",
        t.elapsed().as_secs_f64()
    );
    record(1, "strong rate, modified, H=0.6", &|| {
        slope_within(&pair_06[0], -0.7, 0.12)
    });
    record(2, "strong rate, modified, H=0.85", &|| {
        slope_within(&pair_085[0], -1.0, 0.15)
    });
    record(3, "strong rate, classical, H=0.6", &|| {
        slope_within(&pair_06[1], -0.2, 0.10)
    });
    record(4, "sharpness ordering, H=0.6", &|| {
        criterion_4(&pair_06[0], &pair_06[1])
    });
    record(5, "weak rate, gfbm1d identity", &criterion_5);
    record(6, "Euler limit functional", &criterion_6);
    record(7, "weighted QV scaling", &criterion_7);
    record(8, "mixed covariation scaling", &criterion_8);
    record(9, "sampler validation", &criterion_9);
    record(10, "property suites", &criterion_10);

    let failed = results.iter().filter(|r| !(r.2).0).count();
    println!(
        "{} of {} criteria passed",
        results.len() - failed,
        results.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
