//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line; the
//! process exits non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng as _;

use migvi::estimators::{
    component_diagnostics, estimate_gradients, estimate_kl_unnormalized, frozen_kl_surrogate, var_grad_hessian_form,
    ComponentGradient, EstimatorConfig, FrozenNoise, GradientEstimate, Sampling,
};
use migvi::geometry::{
    approx_bound_constant, bw_distance_sq_iso, delon_gap_check, geodesic_iso, kl_closed_form_iso, kl_quadrature_1d,
    point_cloud_w2_sq, wbw_distance_sq,
};
use migvi::optim::{
    init_mixture, run, step_ibw_variances, step_md_variances, Algorithm, GradientMode, KlEvaluation, OptimizerConfig,
    RunTrace, VariationalState,
};
use migvi::rng::{Purpose, Rng, SeedStream};
use migvi::runner::{evaluate_predictive, PredictiveModel, PredictiveTask, TestLabels};
use migvi::targets::data::{synthetic_logistic, Dataset};
use migvi::targets::{
    finite_difference_gradient, gradient_mismatch, random_mog_spec, CovarianceKind, GaussianMixtureTarget,
    GaussianMixtureTargetSpec, LogisticRegressionData, LogisticTarget,
};
use migvi::{Error, IsotropicGaussian, MixtureState};

const SEEDS: u64 = 5;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn rng(seed: u64, purpose: Purpose, iteration: u64) -> Rng {
    SeedStream::new(seed).substream(purpose, iteration, 0)
}

/// `R²` of the least-squares line through `(i, y_i)`.
fn r_squared(y: &[f64]) -> f64 {
    let n = y.len() as f64;
    let xm = (n - 1.0) / 2.0;
    let ym = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (i, v) in y.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (v - ym);
        sxx += dx * dx;
        syy += (v - ym).powi(2);
    }
    sxy * sxy / (sxx * syy)
}

fn gaussian_fixed_point() -> Outcome {
    let d = 5;
    let mut r = rng(1, Purpose::Target, 0);
    let mu: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
    let target = GaussianMixtureTarget::isotropic_gaussian(&mu, 2.0).unwrap();
    let init = MixtureState::single(IsotropicGaussian::standard(d));
    let mut notes = Vec::new();
    let mut pass = true;
    for alg in [Algorithm::Ibw, Algorithm::Md] {
        let cfg = OptimizerConfig {
            gradients: GradientMode::Exact,
            kl: KlEvaluation::ClosedForm,
            kl_every: 1,
            ..OptimizerConfig::new(alg, 0.1, 5000)
        };
        let trace = run(
            VariationalState::Isotropic(init.clone()),
            &target,
            &cfg,
            SeedStream::new(0),
        )
        .unwrap();
        let kl: Vec<f64> = trace.rows.iter().map(|r| r.kl_estimate).collect();
        // strictly decreasing while the iterate moves; once it is a floating-point fixed point the KL is constant
        let monotone = kl.windows(2).all(|w| w[1] < w[0] || (w[1] == w[0] && w[0] < 1e-20));
        let hit = trace.rows.iter().find(|r| r.kl_estimate < 1e-8).map(|r| r.iter);
        let logs: Vec<f64> = kl[..=100].iter().map(|v| v.ln()).collect();
        let r2 = r_squared(&logs);
        let ok = trace.error.is_none() && monotone && hit.is_some() && r2 >= 0.99;
        pass &= ok;
        notes.push(format!(
            "{}: monotone={monotone} kl<1e-8 at iter {hit:?} R²={r2:.5}",
            alg.name()
        ));
    }
    outcome(pass, notes.join("; "))
}

/// Flattened `[m_1, ε_1, m_2, ε_2, …]`.
fn flatten(state: &MixtureState) -> DVector<f64> {
    let mut v = Vec::new();
    for c in state.components() {
        v.extend(c.mean().iter());
        v.push(c.variance());
    }
    DVector::from_vec(v)
}

fn unflatten(theta: &DVector<f64>, n: usize, d: usize) -> MixtureState {
    let comps = (0..n)
        .map(|j| {
            let s = &theta.as_slice()[j * (d + 1)..(j + 1) * (d + 1)];
            IsotropicGaussian::from_slice(&s[..d], s[d]).unwrap()
        })
        .collect();
    MixtureState::new(comps).unwrap()
}

fn flatten_grads(g: &GradientEstimate) -> DVector<f64> {
    let mut v = Vec::new();
    for c in &g.components {
        v.extend(c.mean_grad.iter());
        v.push(c.var_grad);
    }
    DVector::from_vec(v)
}

fn gradient_correctness() -> Outcome {
    let mut worst: f64 = 0.0;
    for case in 0..20u64 {
        let d = [1, 2, 10][case as usize % 3];
        let mut r = rng(case, Purpose::Target, 1);
        let target = GaussianMixtureTarget::new(random_mog_spec(d, 3.0, 1.0, 3, CovarianceKind::Full, &mut r)).unwrap();
        let n = 1 + (case as usize % 4);
        let mut r = rng(case, Purpose::Init, 1);
        let reference = init_mixture(d, n, 3.0, 1.0, &mut r).unwrap();
        let comps = reference
            .components()
            .iter()
            .map(|c| IsotropicGaussian::new(c.mean().clone(), r.random_range(0.3..2.0)).unwrap())
            .collect();
        let reference = MixtureState::new(comps).unwrap();
        let noise = FrozenNoise::draw(n, d, 20, SeedStream::new(case));
        let analytic = flatten_grads(
            &estimate_gradients(
                &reference,
                &target,
                &EstimatorConfig::default(),
                Sampling::Frozen(&noise),
            )
            .unwrap(),
        );
        let f =
            |theta: &DVector<f64>| frozen_kl_surrogate(&unflatten(theta, n, d), &reference, &target, &noise).unwrap();
        let fd = finite_difference_gradient(f, &flatten(&reference), 1e-5);
        worst = worst.max(gradient_mismatch(&analytic, &fd));
    }
    outcome(
        worst <= 1e-4,
        format!("20 cases, worst coordinate relative error {worst:.2e}"),
    )
}

fn stein_equivalence() -> Outcome {
    let mut worst_z: f64 = 0.0;
    let mut failures = 0;
    for seed in 0..50u64 {
        let d = [1, 2, 5][seed as usize % 3];
        let mut r = rng(seed, Purpose::Target, 2);
        let target = GaussianMixtureTarget::new(random_mog_spec(d, 2.0, 1.5, 1, CovarianceKind::Full, &mut r)).unwrap();
        let n = 1 + seed as usize % 3;
        let mut r = rng(seed, Purpose::Init, 2);
        let state = init_mixture(d, n, 2.0, 1.0, &mut r).unwrap();
        let j = seed as usize % n;
        let mut ra = rng(seed, Purpose::Gradient, 0);
        let mut rb = rng(seed, Purpose::Gradient, 1);
        let a = component_diagnostics(&state, &target, j, 10_000, &mut ra)
            .unwrap()
            .var_grad;
        let b = var_grad_hessian_form(&state, &target, j, 10_000, &mut rb).unwrap();
        let z = (a.value - b.value).abs() / (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        worst_z = worst_z.max(z);
        failures += usize::from(z > 4.0);
    }
    outcome(failures == 0, format!("50 seeds, B=1e4, max |Δ|/σ̂ = {worst_z:.2}"))
}

fn adversarial(rng: &mut Rng, n: usize, d: usize) -> GradientEstimate {
    GradientEstimate {
        components: (0..n)
            .map(|_| ComponentGradient {
                mean_grad: DVector::from_fn(d, |_, _| rng.random_range(-1e3..=1e3)),
                var_grad: rng.random_range(-1e3..=1e3),
            })
            .collect(),
        batch_size: 1,
    }
}

fn positivity() -> Outcome {
    let (n, d) = (3, 2);
    let mut detail = Vec::new();
    let mut pass = true;
    for alg in [Algorithm::Ibw, Algorithm::Md] {
        let mut r = rng(4, Purpose::Gradient, alg as u64);
        let mut state = init_mixture(d, n, 1.0, 1.0, &mut r).unwrap();
        let (mut rejected, mut bad) = (0, 0);
        for _ in 0..10_000 {
            let g = adversarial(&mut r, n, d);
            let gamma = r.random_range(1e-4..1.0);
            let next = match alg {
                Algorithm::Ibw => step_ibw_variances(&state, &g, gamma, 1e-12),
                _ => step_md_variances(&state, &g, gamma, 1e-12, 50.0).map(|(s, _)| s),
            };
            match next {
                Ok(s) => {
                    let ok = s
                        .variances()
                        .iter()
                        .all(|&e| if alg == Algorithm::Md { e > 0.0 } else { e >= 0.0 });
                    bad += usize::from(!ok);
                    state = s;
                }
                Err(Error::VarianceFloor { .. } | Error::Divergence { .. }) => rejected += 1,
                Err(e) => panic!("unexpected {e}"),
            }
        }
        pass &= bad == 0;
        detail.push(format!("{}: {bad} non-positive, {rejected} steps reported", alg.name()));
    }
    let target = GaussianMixtureTarget::isotropic_gaussian(&[0.0, 0.0], 0.1).unwrap();
    let mut negative = 0;
    for seed in 0..20u64 {
        let mut r = rng(seed, Purpose::Init, 3);
        let init = init_mixture(2, 5, 20.0, 1.0, &mut r).unwrap();
        let cfg = OptimizerConfig::new(Algorithm::Ngd, 0.1, 500);
        let trace = run(VariationalState::Isotropic(init), &target, &cfg, SeedStream::new(seed)).unwrap();
        negative += usize::from(matches!(trace.error, Some(Error::NegativeVariance { .. })));
    }
    pass &= negative >= 1;
    detail.push(format!("NGD wide init: {negative}/20 runs hit a negative variance"));
    outcome(pass, detail.join("; "))
}

fn final_kls(
    target: &GaussianMixtureTarget,
    d: usize,
    n: usize,
    s: f64,
    r: f64,
    cfg: &OptimizerConfig,
) -> Vec<RunTrace> {
    (0..SEEDS)
        .map(|seed| {
            let mut ir = rng(seed, Purpose::Init, 0);
            let init = init_mixture(d, n, s, r, &mut ir).unwrap();
            run(
                VariationalState::for_algorithm(init, cfg.algorithm),
                target,
                cfg,
                SeedStream::new(seed),
            )
            .unwrap()
        })
        .collect()
}

fn mog_2d() -> Outcome {
    let mut tr = rng(1, Purpose::Target, 0);
    let target = GaussianMixtureTarget::new(random_mog_spec(2, 8.0, 5.0, 5, CovarianceKind::Full, &mut tr)).unwrap();
    let cfg = OptimizerConfig::new(Algorithm::Ibw, 0.1, 1000);
    // final KL on a common 1e5-sample batch, shared across N
    let big = EstimatorConfig {
        kl_batch: 100_000,
        ..Default::default()
    };
    let mut med = Vec::new();
    let mut errors = 0;
    for n in [1, 5, 10, 20] {
        let traces = final_kls(&target, 2, n, 15.0, 2.0, &cfg);
        errors += traces.iter().filter(|t| t.error.is_some()).count();
        let kl = traces
            .iter()
            .map(|t| {
                estimate_kl_unnormalized(
                    &t.final_state.isotropic_projection(),
                    &target,
                    &big,
                    SeedStream::new(999),
                    0,
                )
                .unwrap()
            })
            .collect();
        med.push(median(kl));
    }
    let pass = errors == 0 && med[3] < med[0] && med[1] >= med[2] && med[2] >= med[3];
    outcome(
        pass,
        format!(
            "median final KL N=1 {:.4}, N=5 {:.4}, N=10 {:.4}, N=20 {:.4}",
            med[0], med[1], med[2], med[3]
        ),
    )
}

fn approximation_bound() -> Outcome {
    let atoms = [
        IsotropicGaussian::from_slice(&[-2.0], 1.0).unwrap(),
        IsotropicGaussian::from_slice(&[2.0], 1.0).unwrap(),
    ];
    let spec = GaussianMixtureTargetSpec::uniform_isotropic(&atoms);
    let c2 = approx_bound_constant(&spec, 4001).unwrap();
    let target = GaussianMixtureTarget::new(spec).unwrap();
    let mut pass = (1.0..=2.0).contains(&c2);
    let mut detail = vec![format!("C²={c2:.4}")];
    for n in [1usize, 2, 4, 8, 16] {
        let mut best = f64::INFINITY;
        for seed in 0..SEEDS {
            let mut ir = rng(seed, Purpose::Init, n as u64);
            let init = init_mixture(1, n, 4.0, 1.0, &mut ir).unwrap();
            let cfg = OptimizerConfig {
                kl_every: 3000,
                ..OptimizerConfig::new(Algorithm::Md, 0.05, 3000)
            };
            let trace = run(VariationalState::Isotropic(init), &target, &cfg, SeedStream::new(seed)).unwrap();
            let state = trace.final_state.isotropic_projection();
            best = best.min(kl_quadrature_1d(&state, &target, -32.0, 32.0, 20_001).unwrap());
        }
        let bound = c2 * ((n as f64).ln() + 1.0) / n as f64;
        pass &= best <= bound;
        detail.push(format!("N={n} KL={best:.2e}≤{bound:.3}"));
    }
    outcome(pass, detail.join(" "))
}

fn geometry_oracles() -> Outcome {
    let tol = 1e-9;
    let iso = |m: &[f64], e: f64| IsotropicGaussian::from_slice(m, e).unwrap();
    let mut checks: Vec<(&str, f64)> = vec![
        (
            "BW self",
            bw_distance_sq_iso(&iso(&[0.0, 0.0], 1.0), &iso(&[0.0, 0.0], 1.0)).unwrap(),
        ),
        (
            "BW mean shift",
            bw_distance_sq_iso(&iso(&[0.0, 0.0], 1.0), &iso(&[3.0, 4.0], 1.0)).unwrap() - 25.0,
        ),
        (
            "BW variance",
            bw_distance_sq_iso(&iso(&[0.0], 1.0), &iso(&[0.0], 4.0)).unwrap() - 1.0,
        ),
        (
            "KL self",
            kl_closed_form_iso(&iso(&[0.0], 1.0), &iso(&[0.0], 1.0)).unwrap(),
        ),
        (
            "KL variance",
            kl_closed_form_iso(&iso(&[0.0], 1.0), &iso(&[0.0], 2.0)).unwrap() - 0.5 * (0.5 - 1.0 + 2f64.ln()),
        ),
        (
            "KL mean",
            kl_closed_form_iso(&iso(&[1.0, 0.0], 1.0), &iso(&[0.0, 0.0], 1.0)).unwrap() - 0.5,
        ),
        (
            "geodesic midpoint",
            geodesic_iso(&iso(&[0.0], 1.0), &iso(&[0.0], 9.0), 0.5)
                .unwrap()
                .variance()
                - 4.0,
        ),
    ];
    let a = MixtureState::from_parts(&[vec![0.0], vec![10.0]], &[1.0, 1.0]).unwrap();
    let b = MixtureState::from_parts(&[vec![10.0], vec![0.0]], &[1.0, 1.0]).unwrap();
    checks.push(("W_bw permutation", wbw_distance_sq(&a, &b).unwrap()));
    let one = GaussianMixtureTargetSpec::isotropic_gaussian(&[0.5], 2.0);
    checks.push(("C² single atom", approx_bound_constant(&one, 2000).unwrap() - 1.0));
    let mut failed: Vec<&str> = checks.iter().filter(|(_, v)| v.abs() > tol).map(|(n, _)| *n).collect();

    let mut r = rng(6, Purpose::Data, 0);
    let mut random = |d: usize| {
        let m: Vec<f64> = (0..d).map(|_| r.random_range(-5.0..5.0)).collect();
        iso(&m, r.random_range(0.05..4.0))
    };
    let (mut sym, mut tri) = (0.0f64, 0.0f64);
    for d in [1, 2, 5, 10] {
        for _ in 0..250 {
            let (p, q, s) = (random(d), random(d), random(d));
            let pq = bw_distance_sq_iso(&p, &q).unwrap();
            sym = sym.max((pq - bw_distance_sq_iso(&q, &p).unwrap()).abs());
            let excess =
                pq.sqrt() - bw_distance_sq_iso(&p, &s).unwrap().sqrt() - bw_distance_sq_iso(&s, &q).unwrap().sqrt();
            tri = tri.max(excess);
        }
    }
    let mut r = rng(7, Purpose::Data, 0);
    let mut delon_ok = true;
    for k in 0..100 {
        let (d, n) = (1 + k % 4, 1 + k % 5);
        let mk = |r: &mut Rng| init_mixture(d, n, 3.0, r.random_range(0.1..8.0 / d as f64), r).unwrap();
        let (p, q, s) = (mk(&mut r), mk(&mut r), mk(&mut r));
        let pq = wbw_distance_sq(&p, &q).unwrap();
        sym = sym.max((pq - wbw_distance_sq(&q, &p).unwrap()).abs());
        tri = tri.max(pq.sqrt() - wbw_distance_sq(&p, &s).unwrap().sqrt() - wbw_distance_sq(&s, &q).unwrap().sqrt());
        delon_ok &= delon_gap_check(&p, &q, point_cloud_w2_sq(&p, &q).unwrap())
            .unwrap()
            .holds;
    }
    if sym > tol {
        failed.push("symmetry");
    }
    if tri > tol {
        failed.push("triangle");
    }
    if !delon_ok {
        failed.push("Delon gap");
    }
    outcome(
        failed.is_empty(),
        format!(
            "{} closed-form checks, randomized symmetry {sym:.1e}, triangle excess {tri:.1e}; failed: {failed:?}",
            checks.len()
        ),
    )
}

fn ibw_vs_bw_full() -> Outcome {
    let mut pass = true;
    let mut detail = Vec::new();
    for d in [5usize, 10] {
        let s = 100.0 / d as f64;
        let mut tr = rng(7, Purpose::Target, d as u64);
        let target = GaussianMixtureTarget::new(random_mog_spec(d, s, 5.0, 5, CovarianceKind::Full, &mut tr)).unwrap();
        let mut time = [Vec::new(), Vec::new()];
        let mut kl = [Vec::new(), Vec::new()];
        for (k, alg) in [Algorithm::Ibw, Algorithm::BwFull].into_iter().enumerate() {
            let cfg = OptimizerConfig {
                kl_every: 1000,
                ..OptimizerConfig::new(alg, 1e-2 / d as f64, 1000)
            };
            for t in final_kls(&target, d, 15, s, 10.0, &cfg) {
                pass &= t.error.is_none();
                time[k].extend(t.step_ms.iter().copied());
                kl[k].push(t.final_kl().unwrap());
            }
        }
        let (ti, tb) = (median(time[0].clone()), median(time[1].clone()));
        let (ki, kb) = (median(kl[0].clone()), median(kl[1].clone()));
        pass &= ti <= tb && ki <= 2.0 * kb;
        detail.push(format!(
            "d={d}: step ms IBW {ti:.3} vs BW {tb:.3}, KL IBW {ki:.2} vs BW {kb:.2}"
        ));
    }
    outcome(pass, detail.join("; "))
}

fn logistic() -> Outcome {
    let mut pass = true;
    let mut acc = Vec::new();
    for seed in 0..SEEDS {
        let mut dr = rng(seed, Purpose::Data, 0);
        let (x, y, _) = synthetic_logistic(200, 10, 2, &mut dr);
        let names = (0..10).map(|i| format!("x{i}")).collect();
        let ds = Dataset::new(names, x, y.iter().map(|&v| v as f64).collect()).unwrap();
        let (mut train, mut test) = ds.train_test_split(0.5, &mut dr).unwrap();
        train.standardize_with(&mut test);
        let classes = ds.distinct_labels();
        let data =
            LogisticRegressionData::new(train.features.clone(), train.class_indices(&classes).unwrap(), 2, 100.0)
                .unwrap();
        let target = LogisticTarget::new(data);
        let mut ir = rng(seed, Purpose::Init, 0);
        let init = init_mixture(10, 5, 20.0, 10.0, &mut ir).unwrap();
        let cfg = OptimizerConfig::new(Algorithm::Md, 1e-2, 2000);
        let trace = run(VariationalState::Isotropic(init), &target, &cfg, SeedStream::new(seed)).unwrap();
        pass &= !matches!(trace.error, Some(Error::NegativeVariance { .. })) && trace.error.is_none();
        let task = PredictiveTask {
            model: PredictiveModel::Logistic(target),
            labels: TestLabels::Classes(test.class_indices(&classes).unwrap()),
            features: test.features,
        };
        let mut pr = rng(seed, Purpose::Predictive, 0);
        let state = trace.final_state.isotropic_projection();
        let a = evaluate_predictive(&state, &task, 100, &mut pr)
            .unwrap()
            .accuracy
            .unwrap();
        pass &= a >= 0.9;
        acc.push(a);
    }
    outcome(pass, format!("test accuracy per seed {acc:?}"))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("det.toml");
    std::fs::write(
        &config,
        r#"
seed = 11

[target]
kind = "mog"
d = 2
s_tg = 8.0
r_tg = 5.0
n_tg = 5
covariance = "full"

[init]
n = 10
s = 15.0
r = 2.0

[optim]
algorithm = "ibw"
step_size = 0.1
iterations = 300
"#,
    )
    .unwrap();
    let mut csvs = Vec::new();
    for k in 0..2 {
        let prefix = dir.path().join(format!("run{k}"));
        let status = Command::new(env!("CARGO_BIN_EXE_migvi"))
            .args(["run", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&prefix)
            .env("MIGVI_THREADS", "1")
            .status()
            .unwrap();
        if !status.success() {
            return outcome(false, format!("run {k} exited with {status}"));
        }
        csvs.push(std::fs::read(prefix.with_extension("trace.csv")).unwrap());
    }
    outcome(
        csvs[0] == csvs[1] && !csvs[0].is_empty(),
        format!(
            "two runs, {} bytes each, identical={}",
            csvs[0].len(),
            csvs[0] == csvs[1]
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let criteria: [Criterion; 10] = [
        (
            "Gaussian fixed point & convergence",
            gaussian_fixed_point,
            Duration::from_secs(5),
        ),
        (
            "Gradient correctness (frozen-sample FD)",
            gradient_correctness,
            Duration::from_secs(30),
        ),
        ("Stein-form equivalence", stein_equivalence, Duration::MAX),
        ("Positivity & NGD negative variance", positivity, Duration::MAX),
        ("2-D multimodal ordering in N", mog_2d, Duration::from_secs(180)),
        ("Approximation bound", approximation_bound, Duration::from_secs(120)),
        ("Geometry oracles", geometry_oracles, Duration::MAX),
        ("IBW vs BW-full comparability", ibw_vs_bw_full, Duration::from_secs(600)),
        ("Bayesian logistic regression", logistic, Duration::MAX),
        ("Determinism (byte-identical trace)", determinism, Duration::MAX),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let started = Instant::now();
        let result = check();
        let elapsed = started.elapsed();
        let in_time = elapsed <= limit;
        let pass = result.pass && in_time;
        failed += usize::from(!pass);
        let budget = if limit == Duration::MAX {
            String::new()
        } else {
            format!(" / limit {}s", limit.as_secs())
        };
        println!(
            "{} {name}: {} [{:.2}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
