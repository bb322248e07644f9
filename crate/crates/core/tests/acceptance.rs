//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single `criterion N ...: PASS|FAIL` line; run with `--nocapture` to see
//! them.

mod common;

use std::time::{Duration, Instant};

use common::*;
use covext::solve::{gradient_hard, gradient_soft, hessian_hard, hessian_soft, objective_hard, objective_soft};
use covext::study::{run_study, Procedure, StudyConfig};
use covext::wiener::{IdentifyConfig, DEFAULT_TEXTURE_LAMBDA};
use covext::*;
use rand::Rng;

fn oracle_inputs(c1: f64, lambda: f64) -> (HermitianSeq, HermitianSeq, WeightMatrix) {
    let lam = IndexSet::symmetric_1d(1);
    let c = HermitianSeq::from_real(lam.clone(), &[1.0, c1, 0.0]).unwrap();
    let p = HermitianSeq::from_real(lam, &[1.0, -0.5, 0.0]).unwrap();
    (c, p, WeightMatrix::scalar(3, lambda).unwrap())
}

#[test]
fn criterion_01_closed_form_oracle() {
    const Q_TOL: f64 = 1e-4;
    const MASS_TOL: f64 = 1e-4;
    const CHAT_TOL: f64 = 1e-6;
    let cfg = SolverConfig::with_grid(GridSpec::uniform(1, 512, true).unwrap());
    let start = Instant::now();
    let mut worst_q: f64 = 0.0;
    let mut worst_mass: f64 = 0.0;
    let mut worst_chat: f64 = 0.0;
    let mut regimes_ok = true;
    for (c1, lambda) in [(0.5, 0.5), (0.8, 0.4), (0.5, 1.5), (-0.3, 0.7)] {
        let (c, p, w) = oracle_inputs(c1, lambda);
        let ex = oracle_1d_example(c1, lambda).unwrap();
        let sol = solve_soft(&c, &p, &w, &cfg).unwrap();
        if ex.singular {
            let want = [-0.5 * ex.q0, ex.q0, -0.5 * ex.q0];
            for (v, t) in sol.q.values().iter().zip(want) {
                worst_q = worst_q.max((v.re - t).abs()).max(v.im.abs());
            }
            regimes_ok &= sol.atoms.len() == 1 && sol.atoms[0].theta[0].abs() < 1e-6;
            let mass = sol.atoms.iter().map(|a| a.mass).sum::<f64>();
            worst_mass = worst_mass.max((mass - ex.beta).abs());
        } else {
            regimes_ok &= sol.atoms.is_empty();
            worst_chat = worst_chat.max(sol.c_hat.norm());
        }
    }
    let elapsed = start.elapsed();
    let ok = worst_q < Q_TOL
        && worst_mass < MASS_TOL
        && worst_chat < CHAT_TOL
        && regimes_ok
        && elapsed < Duration::from_secs(5);
    report(
        "1",
        "closed-form oracle",
        ok,
        format!("max |q-q*| {worst_q:.2e}, max |mass-beta| {worst_mass:.2e}, max |chat| {worst_chat:.2e}, {elapsed:.2?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_02_exact_matching_on_the_boundary() {
    let lam = IndexSet::symmetric_1d(1);
    let c = HermitianSeq::from_real(lam.clone(), &[3.0, 1.0, 0.0]).unwrap();
    let p = HermitianSeq::from_real(lam, &[4.0, -2.0, 0.0]).unwrap();
    let cfg = SolverConfig::with_grid(GridSpec::uniform(1, 1024, true).unwrap());
    let sol = solve_exact(&c, &p, &cfg).unwrap();
    let scale = 2.0 / sol.q.dc();
    let q_err = sol
        .q
        .values()
        .iter()
        .zip([-1.0, 2.0, -1.0])
        .map(|(v, t)| (v * scale - t).norm())
        .fold(0.0, f64::max);
    let c_err = sol
        .c_hat
        .values()
        .iter()
        .map(|v| (v - 1.0).norm())
        .fold(0.0, f64::max);
    let ok = q_err < 1e-4 && c_err < 1e-3;
    report("2", "exact matching on the boundary", ok, format!("|q-q*| {q_err:.2e}, |chat-chat*| {c_err:.2e}"));
    assert!(ok);
}

struct Instance {
    c: HermitianSeq,
    p: HermitianSeq,
    w: WeightMatrix,
}

fn random_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let index = if seed % 2 == 0 {
        IndexSet::symmetric_1d(r.random_range(1..=3))
    } else {
        IndexSet::boxed(&[1, 1]).unwrap()
    };
    let c = random_bona_fide(&mut r, &index, 0.3).add(&noise(&mut r, &index, 0.02)).unwrap();
    let p = random_positive_poly(&mut r, &index, 0.2);
    let scale = r.random_range(0.05..1.0);
    let w = random_weight(&mut r, index.len(), scale);
    Instance { c, p, w }
}

#[test]
fn criterion_03_kkt_closure() {
    const TOL: f64 = 1e-6;
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let mut worst: f64 = 0.0;
    let mut worst_ball: f64 = 0.0;
    let mut nontrivial = 0;
    let mut failures = Vec::new();
    for seed in 0..30 {
        let inst = random_instance(seed);
        for mode in [Mode::Soft, Mode::Hard] {
            match solve(mode, &inst.c, &inst.p, Some(&inst.w), &cfg) {
                Ok(sol) => {
                    worst = worst.max(sol.kkt.max_residual());
                    let outside = inst.w.inv_norm(&inst.p.sub(&inst.c).unwrap()).unwrap() > 1.0;
                    if mode == Mode::Hard && outside {
                        nontrivial += 1;
                        let dist = inst.w.inv_norm(&sol.r.sub(&inst.c).unwrap()).unwrap();
                        worst_ball = worst_ball.max((dist - 1.0).abs());
                    }
                }
                Err(e) => failures.push(format!("seed {seed} {}: {e}", mode.name())),
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && worst < TOL && worst_ball < TOL && elapsed < Duration::from_secs(60);
    report(
        "3",
        "KKT closure",
        ok,
        format!(
            "max residual {worst:.2e}, max ||r-c||-1 {worst_ball:.2e} over {nontrivial} nontrivial hard solves, {} failures, {elapsed:.2?}",
            failures.len()
        ),
    );
    assert!(ok, "{failures:?}");
}

#[test]
fn criterion_04_soft_hard_correspondence() {
    let cfg = SolverConfig::default();
    let mut worst_q: f64 = 0.0;
    let mut worst_map: f64 = 0.0;
    for seed in 100..110 {
        let inst = random_instance(seed);
        let soft = solve_soft(&inst.c, &inst.p, &inst.w, &cfg).unwrap();
        let w_hard = hard_weight_from_soft(&inst.w, &soft.q).unwrap();
        let hard = solve_hard(&inst.c, &inst.p, &w_hard, &cfg).unwrap();
        worst_q = worst_q.max(hard.q.sub(&soft.q).unwrap().max_abs());
        let back = soft_weight_from_hard(&w_hard, &soft.q).unwrap();
        let again = hard_weight_from_soft(&back, &soft.q).unwrap();
        let d1 = (back.matrix() - inst.w.matrix()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let d2 = (again.matrix() - w_hard.matrix()).iter().map(|v| v.norm()).fold(0.0, f64::max);
        let s1 = inst.w.matrix().iter().map(|v| v.norm()).fold(0.0, f64::max);
        let s2 = w_hard.matrix().iter().map(|v| v.norm()).fold(0.0, f64::max);
        worst_map = worst_map.max(d1 / s1).max(d2 / s2);
    }
    let ok = worst_q < 1e-6 && worst_map < 1e-12;
    report("4", "soft/hard correspondence", ok, format!("max |dq| {worst_q:.2e}, weight roundtrip {worst_map:.2e}"));
    assert!(ok);
}

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-12);
    num / den
}

/// Real-coordinate gradient from the sequence-valued one.
fn real_gradient(g: &HermitianSeq) -> Vec<f64> {
    let index = g.index_set();
    (0..index.len())
        .map(|j| {
            let mut e = vec![0.0; index.len()];
            e[j] = 1.0;
            inner_product(g, &HermitianSeq::from_real(index.clone(), &e).unwrap()).unwrap()
        })
        .collect()
}

#[test]
fn criterion_05_derivatives_match_finite_differences() {
    const H: f64 = 1e-5;
    let mut worst_g: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    for seed in 0..50u64 {
        let inst = random_instance(200 + seed);
        let index = inst.c.index_set().clone();
        let grid = GridSpec::uniform(index.dim(), if index.dim() == 1 { 64 } else { 16 }, true).unwrap();
        let mut r = rng(seed);
        let q = random_positive_poly(&mut r, &index, 0.5);
        let gamma = r.random_range(0.2..2.0);
        let z = q.to_real();
        let n = z.len();
        let at = |z: &[f64]| HermitianSeq::from_real(index.clone(), z).unwrap();
        let shift = |i: usize, t: f64| {
            let mut v = z.clone();
            v[i] += t;
            v
        };

        // Soft objective.
        let f = |z: &[f64]| objective_soft(&at(z), &inst.c, &inst.p, &inst.w, &grid).unwrap();
        let g = |z: &[f64]| real_gradient(&gradient_soft(&at(z), &inst.c, &inst.p, &inst.w, &grid).unwrap());
        let fd: Vec<f64> = (0..n).map(|i| (f(&shift(i, H)) - f(&shift(i, -H))) / (2.0 * H)).collect();
        worst_g = worst_g.max(rel(&fd, &g(&z)));
        let hess = hessian_soft(&q, &inst.c, &inst.p, &inst.w, &grid).unwrap();
        for i in 0..n {
            let (gp, gm) = (g(&shift(i, H)), g(&shift(i, -H)));
            let col: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * H)).collect();
            let an: Vec<f64> = hess.column(i).iter().copied().collect();
            worst_h = worst_h.max(rel(&col, &an));
        }

        // Hard objective in (z, γ).
        let fh = |z: &[f64], gm: f64| objective_hard(&at(z), gm, &inst.c, &inst.p, &inst.w, &grid).unwrap();
        let gh = |z: &[f64], gm: f64| {
            let (gq, gg) = gradient_hard(&at(z), gm, &inst.c, &inst.p, &inst.w, &grid).unwrap();
            let mut v = real_gradient(&gq);
            v.push(gg);
            v
        };
        let mut fd: Vec<f64> = (0..n).map(|i| (fh(&shift(i, H), gamma) - fh(&shift(i, -H), gamma)) / (2.0 * H)).collect();
        fd.push((fh(&z, gamma + H) - fh(&z, gamma - H)) / (2.0 * H));
        worst_g = worst_g.max(rel(&fd, &gh(&z, gamma)));
        let hess = hessian_hard(&q, gamma, &inst.c, &inst.p, &inst.w, &grid).unwrap();
        for i in 0..=n {
            let (gp, gm) = if i < n {
                (gh(&shift(i, H), gamma), gh(&shift(i, -H), gamma))
            } else {
                (gh(&z, gamma + H), gh(&z, gamma - H))
            };
            let col: Vec<f64> = gp.iter().zip(&gm).map(|(a, b)| (a - b) / (2.0 * H)).collect();
            let an: Vec<f64> = hess.column(i).iter().copied().collect();
            worst_h = worst_h.max(rel(&col, &an));
        }
    }
    let ok = worst_g <= 1e-6 && worst_h <= 1e-5;
    report("5", "derivatives vs finite differences", ok, format!("gradient {worst_g:.2e}, Hessian {worst_h:.2e}"));
    assert!(ok);
}

#[test]
fn criterion_06_estimator_identities() {
    let mut r = rng(6);
    // Periodogram moments against the direct estimate.
    let mut worst: f64 = 0.0;
    for (dims, grid) in [
        (vec![7], GridSpec::uniform(1, 16, false).unwrap()),
        (vec![7], GridSpec::uniform(1, 13, true).unwrap()),
        (vec![6, 5], GridSpec::new(vec![12, 9], true).unwrap()),
        (vec![6, 5], GridSpec::new(vec![11, 10], false).unwrap()),
    ] {
        let total: usize = dims.iter().product();
        let vals: Vec<num_complex::Complex64> = (0..total)
            .map(|_| num_complex::Complex64::new(normal(&mut r), normal(&mut r)))
            .collect();
        let y = DataRecord::new(dims.clone(), vals).unwrap();
        let ext: Vec<usize> = dims.iter().map(|n| n - 1).collect();
        let index = IndexSet::boxed(&ext).unwrap();
        let a = moments(&periodogram(&y, &grid).unwrap(), &index).unwrap();
        let b = biased_cov(&y, &index).unwrap();
        worst = worst.max(a.sub(&b).unwrap().max_abs());
    }

    // Cone probes with the biased estimate.
    let index = IndexSet::boxed(&[2, 2]).unwrap();
    let mut probe_fail = 0;
    for t in 0..100 {
        let y = DataRecord::from_real(vec![4, 5], (0..20).map(|_| normal(&mut r)).collect()).unwrap();
        let c = biased_cov(&y, &index).unwrap();
        let p = random_positive_poly(&mut r, &index, 1e-3 * (t as f64 + 1.0));
        if !(inner_product(&c, &p).unwrap() > 0.0) {
            probe_fail += 1;
        }
    }

    // Unbiased estimates from short records lose positive definiteness.
    let lam = IndexSet::symmetric_1d(3);
    let mut indefinite = 0;
    for _ in 0..100 {
        let y = DataRecord::from_real(vec![5], (0..5).map(|_| normal(&mut r)).collect()).unwrap();
        let c = unbiased_cov(&y, &lam).unwrap();
        if cone_test_toeplitz_1d(&c).unwrap().0 == ConeClass::Outside {
            indefinite += 1;
        }
    }
    let ok = worst < 1e-10 && probe_fail == 0 && indefinite >= 1;
    report(
        "6",
        "estimator identities",
        ok,
        format!("periodogram gap {worst:.2e}, {probe_fail} failed cone probes, {indefinite}/100 indefinite unbiased"),
    );
    assert!(ok);
}

#[test]
fn criterion_07_estimation_study() {
    let start = Instant::now();
    let cfg = StudyConfig { seed: 7, ..StudyConfig::default() };
    let summary = run_study(&default_system(), &cfg, 20).unwrap();
    let mut finite = true;
    for rep in &summary.replicates {
        let parts: Vec<String> = rep
            .results
            .iter()
            .map(|p| match &p.error {
                Ok(e) => {
                    finite &= e.is_finite();
                    format!("{} {e:.4}", p.procedure.name())
                }
                Err(msg) => {
                    finite = false;
                    format!("{} failed: {msg}", p.procedure.name())
                }
            })
            .collect();
        println!("  replicate {:2}: {}", rep.replicate, parts.join(", "));
    }
    let means: Vec<f64> = Procedure::PRIMARY.iter().filter_map(|&p| summary.mean_error(p)).collect();
    let spread = means.iter().copied().fold(0.0, f64::max) / means.iter().copied().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    let ok = finite && means.len() == 3 && spread <= 3.0 && elapsed < Duration::from_secs(600);
    report(
        "7",
        "estimation study",
        ok,
        format!(
            "mean errors {}, ratio {spread:.2}, {elapsed:.2?}",
            Procedure::PRIMARY
                .iter()
                .zip(&means)
                .map(|(p, m)| format!("{} {m:.4}", p.name()))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_08_threshold_model() {
    let f = price_forward(1.0, 0.0).unwrap();
    let mut r = rng(8);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = r.random_range(-0.7..0.99);
        let tau = r.random_range(-1.5..1.5);
        let back = price_inverse(price_forward(x, tau).unwrap(), tau).unwrap();
        worst = worst.max((back - x).abs());
    }

    // Source texture: the default recursive field thresholded at 0.3.
    let field = simulate_field(&default_system(), 256, 8).unwrap();
    let vals = field.real_values();
    let m = vals.iter().sum::<f64>() / vals.len() as f64;
    let sd = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64).sqrt();
    let y = DataRecord::from_real(vec![256, 256], vals.iter().map(|v| f64::from((v - m) / sd > 0.3)).collect()).unwrap();
    let index = IndexSet::boxed(&[2, 2]).unwrap();
    let w = WeightMatrix::scalar(index.len(), DEFAULT_TEXTURE_LAMBDA).unwrap();
    let model = identify(&y, &index, &w, &IdentifyConfig::default()).unwrap();

    let size = [256usize, 256];
    let lags: [[i64; 2]; 2] = [[1, 0], [0, 1]];
    let mut means = Vec::new();
    let mut covs = vec![Vec::new(); lags.len()];
    for seed in 0..24 {
        let t = synthesize_texture(&model, &size, 1000 + seed).unwrap();
        let v = t.real_values();
        means.push(v.iter().sum::<f64>() / v.len() as f64);
        for (l, lag) in lags.iter().enumerate() {
            covs[l].push(circular_cov(&v, &size, lag));
        }
    }
    let mut z_scores = Vec::new();
    let (mm, mse) = mean_and_se(&means);
    z_scores.push((mm - model.predicted_mean()).abs() / mse);
    for (l, lag) in lags.iter().enumerate() {
        let (cm, cse) = mean_and_se(&covs[l]);
        let want = model.predicted_binary_cov(&size, lag).unwrap();
        z_scores.push((cm - want).abs() / cse);
    }
    let max_z = z_scores.iter().copied().fold(0.0, f64::max);
    let ok = (f - 0.25).abs() <= 1e-10 && worst <= 1e-8 && max_z <= 3.0;
    report(
        "8",
        "threshold model",
        ok,
        format!("forward(1,0)-1/4 {:.1e}, roundtrip {worst:.2e}, texture |z| max {max_z:.2} ({z_scores:.2?})", f - 0.25),
    );
    assert!(ok);
}

#[test]
fn criterion_09_bound_soundness() {
    let cfg = SolverConfig::default();
    let mut r = rng(9);
    let mut violations = 0;
    let mut guaranteed = 0;
    let mut conservative = 0;
    let mut cases: Vec<(f64, f64)> = (0..49)
        .map(|_| (r.random_range(-0.9..0.9), r.random_range(0.05..3.0)))
        .collect();
    cases.push((-0.3, 0.1));
    for (c1, lambda) in cases {
        let (c, p, w) = oracle_inputs(c1, lambda);
        let bound = singular_free_bound(&c, &p, &w).unwrap();
        let sol = solve_soft(&c, &p, &w, &cfg).unwrap();
        let no_singular = sol.c_hat.norm() <= 1e-6 * sol.r.norm();
        if bound.guaranteed_absolutely_continuous {
            guaranteed += 1;
            if !no_singular {
                violations += 1;
            }
        } else if no_singular {
            conservative += 1;
        }
    }
    let ok = violations == 0 && conservative >= 1;
    report(
        "9",
        "bound soundness",
        ok,
        format!("{guaranteed} guaranteed, {violations} violations, {conservative} conservative"),
    );
    assert!(ok);
}

#[test]
fn criterion_10_continuity() {
    const DELTA: f64 = 1e-6;
    const BOUND: f64 = 1e3;
    let cfg = SolverConfig::default();
    let mut worst: f64 = 0.0;
    for base in 0..3u64 {
        let inst = random_instance(300 + base);
        let q0 = solve_soft(&inst.c, &inst.p, &inst.w, &cfg).unwrap().q;
        let mut r = rng(base);
        for _ in 0..20 {
            let dc = noise(&mut r, inst.c.index_set(), DELTA);
            let dp = noise(&mut r, inst.c.index_set(), DELTA);
            let dw = DELTA * normal(&mut r);
            let n = inst.w.size();
            let w = WeightMatrix::new(inst.w.matrix() + nalgebra::DMatrix::identity(n, n).map(|v: f64| num_complex::Complex64::new(v * dw, 0.0))).unwrap();
            let step = (dc.norm().powi(2) + dp.norm().powi(2) + n as f64 * dw * dw).sqrt();
            let q1 = solve_soft(&inst.c.add(&dc).unwrap(), &inst.p.add(&dp).unwrap(), &w, &cfg)
                .unwrap()
                .q;
            worst = worst.max(q1.sub(&q0).unwrap().norm() / step);
        }
    }
    let ok = worst < BOUND;
    report("10", "continuity", ok, format!("max |dq|/|delta| {worst:.2e} (bound {BOUND:.0e})"));
    assert!(ok);
}
