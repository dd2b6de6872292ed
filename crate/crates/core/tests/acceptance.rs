//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

mod common;

use std::time::{Duration, Instant};

use codesign_core::equilibria::DEFAULT_FD_STEP;
use codesign_core::flow::FlowStatus;
use codesign_core::linalg::line_angle;
use codesign_core::*;
use common::*;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn diag_plant(eigs: &[f64], eps: f64, delta: f64) -> Plant<f64> {
    Plant::new(DMatrix::from_diagonal(&DVector::from_row_slice(eigs)), eps, delta).unwrap()
}

fn rescaled_opts() -> FlowOptions<f64> {
    FlowOptions {
        rescaled: true,
        ..Default::default()
    }
}

fn analytic_minimum_reproduction() -> Outcome {
    let eigs = [-1.0, -2.0, -3.0];
    let plant = diag_plant(&eigs, 0.01, 0.01);
    let spec = Spectrum::<f64>::from_eigenvalues(&eigs).unwrap();
    let v1 = spec.v(0);
    let target = analytic_minimum(&spec, 0.01, 0.01).unwrap();
    let runs = multi_start(&plant, 10, 2024, &rescaled_opts()).unwrap();
    let mut max_angle: f64 = 0.0;
    let mut max_rel: f64 = 0.0;
    let mut converged = 0;
    for t in &runs.all {
        if t.status != FlowStatus::Converged {
            continue;
        }
        converged += 1;
        let p = &t.final_placement;
        max_angle = max_angle.max(line_angle(p.b(), &v1)).max(line_angle(p.c(), &v1));
        max_rel = max_rel.max((t.final_phi().unwrap() - target).abs() / target);
    }
    outcome(
        converged > 0 && max_angle < 1e-6 && max_rel < 1e-8,
        format!("{converged}/10 converged, max angle {max_angle:.2e}, max rel Φ error {max_rel:.2e}"),
    )
}

fn scalar_chain() -> Outcome {
    let plant = diag_plant(&[-1.0], 3.0, 3.0);
    let one = DVector::from_element(1, 1.0);
    let pl = Placement::new(one.clone(), one).unwrap();
    let report = cost_report(&plant, &pl).unwrap();
    let errs = [
        (report.gains.k[(0, 0)] - 1.0 / 3.0).abs(),
        (report.gains.sigma[(0, 0)] - 1.0 / 3.0).abs(),
        (report.adjoints.m[(0, 0)] - 1.0 / 36.0).abs(),
        (report.adjoints.n[(0, 0)] - 1.0 / 36.0).abs(),
        (report.phi - 4.0 / 9.0).abs(),
    ];
    let max = errs.iter().copied().fold(0.0, f64::max);
    outcome(max < 1e-10, format!("max error over K, Σ, M, N, Φ: {max:.2e}"))
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut max_rel: f64 = 0.0;
    let h = 1e-3;
    for trial in 0..20 {
        let n = 3 + trial % 2;
        let eps = rand::Rng::random_range(&mut rng, 0.01..1.0);
        let delta = rand::Rng::random_range(&mut rng, 0.01..1.0);
        let plant = random_symmetric_plant(n, eps, delta, &mut rng);
        let pl = random_placement(n, &mut rng);
        let g = gradient(&plant, &pl, false).unwrap();
        for _ in 0..10 {
            let ob = random_skew(n, &mut rng);
            let oc = random_skew(n, &mut rng);
            let curve = |t: f64| {
                let b = (&ob * -t).exp() * pl.b();
                let c = (&oc * -t).exp() * pl.c();
                phi(&plant, &Placement::from_unnormalized(b, c).unwrap()).unwrap()
            };
            let fd = richardson_diff(curve, h);
            // Euclidean sphere gradient of Φ is 2·g; the curve's velocity is (−Ω_B b̄, −Ω_C c̄).
            let from_grad = 2.0 * (g.g_b.dot(&(-&ob * pl.b())) + g.g_c.dot(&(-&oc * pl.c())));
            let from_bracket = directional_derivative(&plant, &pl, &ob, &oc).unwrap();
            for v in [from_grad, from_bracket] {
                max_rel = max_rel.max((v - fd).abs() / fd.abs().max(v.abs()));
            }
        }
    }
    outcome(max_rel < 1e-5, format!("200 directions, max relative error {max_rel:.2e}"))
}

fn gain_sensitivity_signs() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut max_deriv = f64::NEG_INFINITY;
    let mut max_rel: f64 = 0.0;
    for trial in 0..100 {
        let n = 1 + trial % 4;
        let a = random_hurwitz(n, &mut rng);
        let r = rand::Rng::random_range(&mut rng, 0.01..2.0);
        let s = rand::Rng::random_range(&mut rng, 0.01..2.0);
        let plant = Plant::new(a, r, s).unwrap();
        let pl = random_placement(n, &mut rng);
        let sens = phi_gain_sensitivity(&plant, &pl).unwrap();
        max_deriv = max_deriv.max(sens.dphi_dr).max(sens.dphi_ds);
        let h = 1e-2 * r.min(s);
        let at = |e: f64, d: f64| phi(&plant.with_gains(e, d).unwrap(), &pl).unwrap();
        let fd_r = richardson_diff(|t| at(r + t, s), h);
        let fd_s = richardson_diff(|t| at(r, s + t), h);
        for (an, fd) in [(sens.dphi_dr, fd_r), (sens.dphi_ds, fd_s)] {
            max_rel = max_rel.max((an - fd).abs() / an.abs().max(fd.abs()));
        }
    }
    outcome(
        max_deriv <= 1e-10 && max_rel < 1e-6,
        format!("max ∂Φ/∂r, ∂Φ/∂s = {max_deriv:.2e}, max FD relative error {max_rel:.2e}"),
    )
}

fn enumeration_vs_flow() -> Outcome {
    let opts = FlowOptions {
        grad_tol: 1e-11,
        ..rescaled_opts()
    };
    let mut details = Vec::new();
    let mut pass = true;
    for eigs in [vec![-1.0, -2.0], vec![-1.0, -2.0, -4.0]] {
        let spec = Spectrum::<f64>::from_eigenvalues(&eigs).unwrap();
        let plant = Plant::new(spec.reconstruct(), 0.0, 0.0).unwrap();
        let en = enumerate_equilibria_zero(&spec).unwrap();
        let runs = multi_start(&plant, 50, 77, &opts).unwrap();
        let mut worst: f64 = 0.0;
        let mut not_converged = 0;
        for t in &runs.all {
            if t.status != FlowStatus::Converged {
                not_converged += 1;
            }
            let bg = beta_gamma_coords(&t.final_placement, &spec).unwrap();
            worst = worst.max(en.nearest(&bg).unwrap().1);
        }
        pass &= worst < 1e-6 && not_converged == 0;
        details.push(format!(
            "n={}: {} candidates, worst match {worst:.2e}, {not_converged} unconverged",
            eigs.len(),
            en.candidates.len()
        ));
    }
    let lam = DVector::from_vec(vec![-1.0f64, -2.0]);
    let (x11, e11) = xi_vector(&lam, &[0, 1], &[1.0, 1.0]).unwrap();
    let (x1m, e1m) = xi_vector(&lam, &[0, 1], &[1.0, -1.0]).unwrap();
    let xi_ok = !e11
        && e1m
        && (x11[0] + 78.0).abs() < 1e-9
        && (x11[1] - 120.0).abs() < 1e-9
        && (x1m[0] - 114.0).abs() < 1e-9
        && (x1m[1] - 168.0).abs() < 1e-9;
    details.push(format!(
        "ξ(1,1) = ({:.6}, {:.6}) absent={}, ξ(1,−1) = ({:.6}, {:.6}) present={}",
        x11[0], x11[1], !e11, x1m[0], x1m[1], e1m
    ));
    outcome(pass && xi_ok, details.join("; "))
}

fn phi_bar_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut max_phi_bar = f64::NEG_INFINITY;
    let mut max_form_rel: f64 = 0.0;
    let mut max_disjoint: f64 = 0.0;
    for trial in 0..200 {
        let n = 2 + trial % 4;
        let plant = random_symmetric_plant(n, 0.0, 0.0, &mut rng);
        let pl = random_placement(n, &mut rng);
        let forms = phi_bar_forms(&plant, &pl).unwrap();
        max_phi_bar = max_phi_bar.max(forms.trace);
        let scale = forms.trace.abs().max(1e-300);
        for other in [forms.via_actuator, forms.via_sensor] {
            max_form_rel = max_form_rel.max((other - forms.trace).abs() / scale);
        }
        let spec = Spectrum::of_plant(&plant).unwrap();
        let split = 1 + trial % (n - 1);
        let b = (0..split).fold(DVector::zeros(n), |acc, i| acc + spec.v(i) * gaussian_vector(1, &mut rng)[0]);
        let c = (split..n).fold(DVector::zeros(n), |acc, i| acc + spec.v(i) * gaussian_vector(1, &mut rng)[0]);
        let disjoint = Placement::from_unnormalized(b, c).unwrap();
        max_disjoint = max_disjoint.max(phi_bar(&plant, &disjoint).unwrap().abs());
    }
    outcome(
        max_phi_bar <= 1e-10 && max_disjoint <= 1e-10 && max_form_rel <= 1e-9,
        format!(
            "max Φ̄ = {max_phi_bar:.2e}, max |Φ̄| disjoint = {max_disjoint:.2e}, max form disagreement {max_form_rel:.2e}"
        ),
    )
}

fn unique_stability() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pass = true;
    let mut notes = Vec::new();
    for trial in 0..10 {
        let n = 2 + trial % 2;
        let eigs = random_spectrum(n, 0.1, &mut rng);
        let a = symmetric_from(&eigs, &mut rng);
        let spec = Spectrum::new(&a).unwrap();
        let plant = Plant::new(a, 0.0, 0.0).unwrap();
        let mut en = enumerate_equilibria_zero(&spec).unwrap();
        en.classify(&plant, DEFAULT_FD_STEP).unwrap();
        let stable: Vec<_> = en
            .candidates
            .iter()
            .filter(|c| c.stability.as_ref().unwrap().stability == Stability::Stable)
            .collect();
        let v1 = spec.v(0);
        let one_v1 = stable.len() == 1
            && stable[0].kind == CandidateKind::CommonSupport
            && line_angle(stable[0].placement.b(), &v1) < 1e-12
            && line_angle(stable[0].placement.c(), &v1) < 1e-12;
        let disjoint_ok = en.disjoint().all(|c| c.stability.as_ref().unwrap().stability != Stability::Stable);
        if !(one_v1 && disjoint_ok) {
            pass = false;
            notes.push(format!("spectrum {eigs:?}: {} stable", stable.len()));
        }
    }
    let detail = if pass {
        "10 random spectra (n = 2, 3): exactly one Stable candidate, (v₁, ±v₁), every time".to_string()
    } else {
        notes.join("; ")
    };
    outcome(pass, detail)
}

fn monte_carlo() -> Outcome {
    let plant = diag_plant(&[-1.0], 3.0, 3.0);
    let one = DVector::from_element(1, 1.0);
    let pl = Placement::new(one.clone(), one).unwrap();
    let cfg = SimConfig {
        dt: 1e-3,
        horizon_t: 200.0,
        n_paths: 64,
        burn_in: 20.0,
        seed: 8,
    };
    let r = estimate_eta(&plant, &pl, &cfg).unwrap();
    let err = (r.eta_hat - 4.0 / 9.0).abs();
    outcome(
        err < 3.0 * r.stderr + 0.01,
        format!("η̂ = {:.6}, stderr {:.2e}, |η̂ − 4/9| = {err:.2e}", r.eta_hat, r.stderr),
    )
}

fn laplacian_remark() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 5;
    let l = random_laplacian(n, &mut rng);
    let plant = Plant::new(-l, 0.01, 0.01).unwrap();
    let ones = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let runs = multi_start(&plant, 10, 99, &rescaled_opts()).unwrap();
    let mut worst: f64 = 0.0;
    let mut converged = 0;
    for t in &runs.all {
        if t.status == FlowStatus::Converged {
            converged += 1;
        }
        let p = &t.final_placement;
        worst = worst.max(line_angle(p.b(), &ones)).max(line_angle(p.c(), &ones));
    }
    outcome(
        converged == 10 && worst < 1e-4,
        format!("{converged}/10 converged, max angle to 1ₙ/√n {worst:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Option<Duration>); 9] = [
        ("analytic minimum reproduction", analytic_minimum_reproduction, Some(Duration::from_secs(10))),
        ("scalar closed-form chain", scalar_chain, Some(Duration::from_secs(1))),
        ("gradient vs finite differences", gradient_correctness, Some(Duration::from_secs(30))),
        ("gain sensitivity signs", gain_sensitivity_signs, None),
        ("equilibrium enumeration vs flow", enumeration_vs_flow, None),
        ("potential sign and forms", phi_bar_properties, None),
        ("unique stable equilibrium", unique_stability, None),
        ("Monte Carlo agreement", monte_carlo, Some(Duration::from_secs(60))),
        ("Laplacian consensus placement", laplacian_remark, None),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = budget.map_or(true, |b| elapsed <= b);
        let pass = out.pass && in_time;
        if !pass {
            failures += 1;
        }
        let budget_note = budget.map_or(String::new(), |b| format!(" / budget {:.0} s", b.as_secs_f64()));
        println!(
            "criterion {}: {} {name}: {} [{:.2} s{budget_note}]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
