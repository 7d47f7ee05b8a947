//! Acceptance suite: one `[PASS]`/`[FAIL]` line per criterion, exit code 1 if any fail.
//!
//! Runs without the libtest harness so the report is always printed.
//! Tolerances and runtime limits are fixed below; the experiment-backed
//! criteria use scaled versions of the shipped configs with their master seed.

use std::sync::OnceLock;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use ual_core::analysis::{
    closed_form_mse, fig5_discrepancy, lower_order_mse, mc_bias_variance, prop1_check, Gaussian, LowerOrderPartition,
    TargetFamily,
};
use ual_core::bpr::{design_matrix, feature_map, posterior_update, BprPrior};
use ual_core::gpr::{gp_fit, KernelSpec, MeanFn};
use ual_core::rng::derive_rng;
use ual_expcli::aggregate::{mean_std, AggregateResults};
use ual_expcli::emit::traces_csv;
use ual_expcli::{configs, run_experiment, ExperimentConfig};

const IDENTITY_TOL: f64 = 1e-8;
const GRID_POINTS: usize = 50;
const MC_SAMPLES: usize = 100_000;
const MC_SIGMAS: f64 = 3.0;
const GP_BPR_TOL: f64 = 1e-8;
const PAIRED_FRACTION: f64 = 0.65;
const MATCHED_DISCREPANCY_TOL: f64 = 1e-8;
const DISCREPANCY_RATIO: f64 = 1e3;
const CONCENTRATION_MIN: usize = 95;
const BIAS_TO_VARIANCE: f64 = 0.1;

type Criterion = (&'static str, fn() -> Outcome, u64);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn grid() -> Vec<f64> {
    (0..GRID_POINTS).map(|i| -2.0 + 4.0 * i as f64 / (GRID_POINTS - 1) as f64).collect()
}

fn uniform_inputs<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-2.0..=2.0)).collect()
}

fn normal_vec<R: Rng>(d: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

fn shipped(name: &str) -> ExperimentConfig {
    configs::get(name).expect("shipped config").expect("valid config")
}

fn scaled(name: &str, n_seeds: usize, budget: usize, parallelism: usize) -> ExperimentConfig {
    let mut cfg = shipped(name);
    cfg.n_seeds = n_seeds;
    cfg.budget = budget;
    cfg.parallelism = parallelism;
    cfg.decompose = false;
    cfg.validate().expect("scaled config stays valid");
    cfg
}

fn run(cfg: &ExperimentConfig) -> AggregateResults {
    run_experiment(cfg, None).expect("experiment runs")
}

/// Scaled degree sweep shared by the ordering, early-stage and determinism checks.
fn degree_sweep() -> &'static (AggregateResults, Duration) {
    static RUN: OnceLock<(AggregateResults, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let start = Instant::now();
        let r = run(&scaled("fig3_fig4_bpr_degrees", 50, 100, 8));
        (r, start.elapsed())
    })
}

// 1. Matched model: closed-form MSE equals twice the latent posterior variance.
fn matched_identity() -> Outcome {
    let mut worst = 0.0f64;
    for (k, &n) in [0usize, 5, 20, 100].iter().cycle().take(20).enumerate() {
        let mut rng = derive_rng(11, &[k as u64]);
        let family = TargetFamily::random(3, 0.5 + rng.random::<f64>(), &mut rng).unwrap();
        let prior = family.matched_prior();
        let xs = uniform_inputs(n, &mut rng);
        let ys: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let post = posterior_update(&prior, &xs, &ys).unwrap();
        let (phi, phi_hat) = (design_matrix(&xs, 3), design_matrix(&xs, 3));
        for x in grid() {
            let mse = closed_form_mse(x, &family, &prior, &phi, &phi_hat).unwrap();
            let (_, predictive) = post.predictive(x);
            let two_var = 2.0 * (predictive - prior.noise_variance());
            worst = worst.max((mse - two_var).abs() / (1.0 + mse.abs()));
        }
    }
    outcome(worst < IDENTITY_TOL, format!("max relative gap {worst:.2e} (< {IDENTITY_TOL:e})"))
}

// 2. Lower-order block form equals the general closed form.
fn lower_order_identity() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let mut rng = derive_rng(12, &[k]);
        let p = 1 + (k % 2) as usize;
        let noise = 0.5 + rng.random::<f64>();
        let family = TargetFamily::random(3, noise, &mut rng).unwrap();
        let n = [0usize, 5, 20, 100][(k / 2 % 4) as usize];
        let xs = uniform_inputs(n, &mut rng);
        let part = LowerOrderPartition::new(&family, &xs, p).unwrap();
        let prior = part.assumed_prior();
        let (phi, phi_hat) = (design_matrix(&xs, 3), design_matrix(&xs, p));
        for x in grid() {
            let block = lower_order_mse(x, &part, &prior, noise).unwrap().total;
            let general = closed_form_mse(x, &family, &prior, &phi, &phi_hat).unwrap();
            worst = worst.max((block - general).abs() / (1.0 + general.abs()));
        }
    }
    outcome(worst < IDENTITY_TOL, format!("max relative gap {worst:.2e} (< {IDENTITY_TOL:e})"))
}

/// Brute-force expected MSE: w ~ family, y = Φw + ε, θ ~ posterior;
/// returns (mean, batch standard error) of (φ^pᵀθ − φ^lᵀw)².
fn simulate_mse(x: f64, family: &TargetFamily, prior: &BprPrior, xs: &[f64], seed: u64) -> (f64, f64) {
    let mut rng = derive_rng(seed, &[]);
    let (l, p) = (family.order(), prior.degree());
    let s2 = family.noise_variance();
    let phi = design_matrix(xs, l);
    let phi_hat = design_matrix(xs, p);
    let prior_prec = prior.covariance().clone().try_inverse().unwrap();
    let post_cov = (&prior_prec + phi_hat.transpose() * &phi_hat / s2).try_inverse().unwrap();
    let post_cov: DMatrix<f64> = (&post_cov + post_cov.transpose()) * 0.5;
    let post_chol = post_cov.clone().cholesky().unwrap().l();
    let w_chol = family.covariance().clone().cholesky().unwrap().l();
    let (phi_l, phi_p) = (feature_map(x, l), feature_map(x, p));
    let prior_term = &prior_prec * prior.mean();
    let batches = 20;
    let per = MC_SAMPLES / batches;
    let means: Vec<f64> = (0..batches)
        .map(|_| {
            let mut acc = 0.0;
            for _ in 0..per {
                let w = family.mean() + &w_chol * normal_vec(l + 1, &mut rng);
                let y = &phi * &w + normal_vec(xs.len(), &mut rng) * s2.sqrt();
                let theta = &post_cov * (&prior_term + phi_hat.transpose() * y / s2) + &post_chol * normal_vec(p + 1, &mut rng);
                acc += (phi_p.dot(&theta) - phi_l.dot(&w)).powi(2);
            }
            acc / per as f64
        })
        .collect();
    let (m, sd) = mean_std(&means);
    (m, sd / (batches as f64).sqrt())
}

// 3. Closed form against simulation.
fn closed_form_vs_simulation() -> Outcome {
    let configs = [(1usize, 0usize), (1, 5), (2, 10), (2, 20), (3, 5), (3, 20), (4, 10), (4, 20), (5, 20), (5, 30)];
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (k, &(p, n)) in configs.iter().enumerate() {
        let mut rng = derive_rng(13, &[k as u64]);
        let noise = 0.5 + rng.random::<f64>();
        let family = TargetFamily::random(3, noise, &mut rng).unwrap();
        let prior = TargetFamily::random(p, noise, &mut rng).unwrap().matched_prior();
        let xs = uniform_inputs(n, &mut rng);
        let x = rng.random_range(-2.0..=2.0);
        let cf = closed_form_mse(x, &family, &prior, &design_matrix(&xs, 3), &design_matrix(&xs, p)).unwrap();
        let (mc, se) = simulate_mse(x, &family, &prior, &xs, 1300 + k as u64);
        let z = (cf - mc).abs() / se;
        worst = worst.max(z);
        if z >= MC_SIGMAS {
            failures += 1;
        }
    }
    outcome(failures == 0, format!("worst |closed − MC| = {worst:.2} batch SE (< {MC_SIGMAS}); {failures}/10 outside"))
}

// 4. GP with a linear kernel reproduces degree-1 BPR under the standard prior.
fn gp_linear_equals_bpr() -> Outcome {
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let mut rng = derive_rng(14, &[k]);
        let n = rng.random_range(1..=50);
        let noise = 0.1 + rng.random::<f64>();
        let xs = uniform_inputs(n, &mut rng);
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 * x - 0.3 + rng.sample::<f64, _>(StandardNormal)).collect();
        let post = posterior_update(&BprPrior::standard(1, noise).unwrap(), &xs, &ys).unwrap();
        let inputs: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let gp = gp_fit(&KernelSpec::linear(1.0, 1.0), MeanFn::Zero, &inputs, &ys, noise).unwrap();
        let queries: Vec<Vec<f64>> = grid().into_iter().map(|x| vec![x]).collect();
        for (q, (gm, gv)) in queries.iter().zip(gp.latent_many(&queries).unwrap()) {
            let (bm, bv) = post.predictive(q[0]);
            worst = worst.max((gm - bm).abs()).max((gv + noise - bv).abs());
        }
    }
    outcome(worst < GP_BPR_TOL, format!("max |Δmean|, |Δvariance| = {worst:.2e} (< {GP_BPR_TOL:e})"))
}

fn paired_fraction(r: &AggregateResults, model: &str, step: usize, ual_wins: bool) -> f64 {
    let ual = r.per_seed_at(model, "variance", step);
    let random = r.per_seed_at(model, "random", step);
    assert_eq!(ual.len(), random.len());
    let hits = ual.iter().zip(&random).filter(|(u, r)| if ual_wins { u < r } else { u > r }).count();
    hits as f64 / ual.len() as f64
}

// 5. Variance UAL loses to random for under-parameterized models and wins otherwise.
fn degree_ordering() -> Outcome {
    let (r, _) = degree_sweep();
    let mut pass = true;
    let mut parts = Vec::new();
    for degree in 1..=5 {
        let model = format!("bpr_p{degree}");
        let ual_wins = degree >= 3;
        let (u, rnd) = (r.mean_at(&model, "variance", 50).unwrap(), r.mean_at(&model, "random", 50).unwrap());
        let frac = paired_fraction(r, &model, 50, ual_wins);
        let ok = (if ual_wins { u < rnd } else { u > rnd }) && frac >= PAIRED_FRACTION;
        pass &= ok;
        parts.push(format!("p{degree}: ual {u:.3} vs rnd {rnd:.3}, paired {:.0}%", 100.0 * frac));
    }
    outcome(pass, parts.join("; "))
}

// 6. Early in the run, UAL drops faster for degrees 1 and 2.
fn early_stage() -> Outcome {
    let (r, _) = degree_sweep();
    let mut pass = true;
    let mut parts = Vec::new();
    for degree in 1..=2 {
        let model = format!("bpr_p{degree}");
        let (u, rnd) = (r.mean_at(&model, "variance", 10).unwrap(), r.mean_at(&model, "random", 10).unwrap());
        pass &= u < rnd;
        parts.push(format!("p{degree} step 10: ual {u:.3} vs rnd {rnd:.3}"));
    }
    outcome(pass, parts.join("; "))
}

// 7. Discrepancy between MSE and twice the variance vanishes only for the matched model.
fn discrepancy() -> Outcome {
    let r = run(&shipped("fig5_discrepancy"));
    let mean_of = |model: &str| {
        let rows: Vec<f64> = r.discrepancy.iter().filter(|d| d.model == model).map(|d| mean_std(&d.values).0).collect();
        rows.iter().sum::<f64>() / rows.len() as f64
    };
    let matched_max = r.discrepancy.iter().filter(|d| d.model == "bpr_p3").flat_map(|d| d.values.iter().copied()).fold(0.0, f64::max);
    let matched = mean_of("bpr_p3");
    let (d1, d2) = (mean_of("bpr_p1"), mean_of("bpr_p2"));
    // Independent spot check of one grid value through the library entry point.
    let spot = fig5_discrepancy(0.0, &TargetFamily::standard(3, 1.0).unwrap(), &BprPrior::standard(3, 1.0).unwrap(), &[0.5, -1.0]).unwrap();
    let pass = matched_max < MATCHED_DISCREPANCY_TOL
        && spot < MATCHED_DISCREPANCY_TOL
        && d1 >= DISCREPANCY_RATIO * matched
        && d2 >= DISCREPANCY_RATIO * matched;
    outcome(pass, format!("matched max {matched_max:.2e}, mean {matched:.2e}; p1 mean {d1:.3e}; p2 mean {d2:.3e}"))
}

// 8. GP kernels: Matérn UAL beats random, linear UAL loses to random.
fn gp_kernels() -> Outcome {
    let r = run(&scaled("fig7_gpr_kernels", 50, 100, 0));
    let at = |m: &str, s: &str| r.mean_at(m, s, 50).unwrap();
    let (mu, mr) = (at("gpr_matern52", "variance"), at("gpr_matern52", "random"));
    let (lu, lr) = (at("gpr_linear", "variance"), at("gpr_linear", "random"));
    outcome(mu < mr && lu > lr, format!("matern ual {mu:.3} vs rnd {mr:.3}; linear ual {lu:.3} vs rnd {lr:.3}"))
}

// 9. Error-aware acquisition on the motivating target.
fn remedies() -> Outcome {
    let direct = run(&shipped("fig10_direct_mse"));
    let bound = run(&shipped("fig11_upper_bound"));
    let m = "bpr_p1";
    let at = |r: &AggregateResults, s: &str| r.mean_at(m, s, 50).unwrap();
    let (d, u, v, rnd) = (at(&direct, "direct_mse"), at(&bound, "upper_bound"), at(&direct, "variance"), at(&direct, "random"));
    // Both runs share seeds, so the random baseline is identical.
    let same_baseline = direct.per_seed_at(m, "random", 50) == bound.per_seed_at(m, "random", 50);
    outcome(
        d <= rnd && u <= rnd && v > rnd && same_baseline,
        format!("direct {d:.3}, upper bound {u:.3}, variance {v:.3}, random {rnd:.3}"),
    )
}

// 10. Density-ratio bound on the difference of predictive means.
fn prop1() -> Outcome {
    let mut held = 0;
    let mut tightest = f64::INFINITY;
    for k in 0..100u64 {
        let mut rng = derive_rng(20, &[k]);
        let p = Gaussian::new(rng.random_range(-1.0..1.0), rng.random_range(0.3..2.0)).unwrap();
        let pi = Gaussian::new(p.mean + rng.random_range(-0.5..0.5), p.variance * rng.random_range(0.7..1.4)).unwrap();
        let r = prop1_check(pi, p, 12.0).unwrap();
        if r.holds {
            held += 1;
        }
        tightest = tightest.min(r.bound - r.bias_sq);
    }
    outcome(held == 100, format!("{held}/100 hold; smallest slack {tightest:.3e}"))
}

// 11. Matched posterior concentrates; bias becomes negligible relative to variance.
fn concentration() -> Outcome {
    let prior = BprPrior::standard(3, 1.0).unwrap();
    let mut closer = 0;
    for seed in 0..100u64 {
        let mut rng = derive_rng(21, &[seed]);
        let w = normal_vec(4, &mut rng);
        let xs = uniform_inputs(200, &mut rng);
        let ys: Vec<f64> = (design_matrix(&xs, 3) * &w).iter().map(|f| f + rng.sample::<f64, _>(StandardNormal)).collect();
        let small = posterior_update(&prior, &xs[..10], &ys[..10]).unwrap();
        let large = posterior_update(&prior, &xs, &ys).unwrap();
        if (large.mean() - &w).norm() < (small.mean() - &w).norm() {
            closer += 1;
        }
    }
    let family = TargetFamily::standard(3, 1.0).unwrap();
    let report = mc_bias_variance(0.0, &family, &prior, 200, 20_000, &mut derive_rng(21, &[1000])).unwrap();
    let ratio = report.bias / report.variance;
    outcome(
        closer >= CONCENTRATION_MIN && ratio < BIAS_TO_VARIANCE,
        format!("{closer}/100 seeds closer at n=200; bias/variance at x=0 = {ratio:.3e} (bias {:.3e}, variance {:.3e})", report.bias, report.variance),
    )
}

// 12. Serial and parallel runs give byte-identical traces.
fn determinism() -> Outcome {
    let (parallel, _) = degree_sweep();
    let cfg = scaled("fig3_fig4_bpr_degrees", 50, 100, 1);
    let serial = run(&cfg);
    let (a, b) = (traces_csv(&cfg.experiment_id, parallel), traces_csv(&cfg.experiment_id, &serial));
    outcome(a == b, format!("{} bytes, identical: {}", a.len(), a == b))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("1 matched MSE equals twice the posterior variance", matched_identity, 5),
        ("2 lower-order block form equals general closed form", lower_order_identity, 5),
        ("3 closed form within 3 SE of simulation", closed_form_vs_simulation, 120),
        ("4 GP linear kernel equals degree-1 BPR", gp_linear_equals_bpr, 10),
        ("5 degree sweep ordering at step 50", degree_ordering, 600),
        ("6 early-stage advantage for degrees 1-2", early_stage, 600),
        ("7 discrepancy vanishes only for matched model", discrepancy, 30),
        ("8 GP kernel ordering at step 50", gp_kernels, 900),
        ("9 error-aware acquisition beats random", remedies, 600),
        ("10 density-ratio bias bound", prop1, 5),
        ("11 posterior concentration", concentration, 120),
        ("12 parallel and serial traces identical", determinism, 600),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let o = check();
        let secs = start.elapsed().as_secs_f64();
        let pass = o.pass && secs < limit as f64;
        if !pass {
            failed += 1;
        }
        println!("[{}] {name}: {} ({secs:.2} s, limit {limit} s)", if pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("degree sweep shared by 5, 6 and 12 took {:.2} s", degree_sweep().1.as_secs_f64());
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

