use std::path::Path;

use codesign_core::equilibria::{DEFAULT_FD_STEP, ENUMERATION_CAP, SYSTEM_RESIDUAL};
use codesign_core::flow::draw_start;
use codesign_core::gains::pbh_reports;
use codesign_core::{
    adjoint_pair, analytic_gains_at_v1, analytic_minimum, classify_stability, cost_report, enumerate_equilibria_zero,
    estimate_eta, gain_pair, gradient, is_equilibrium, multi_start, phi, phi_bar, phi_bar_forms, phi_gain_sensitivity,
    CodesignError, FlowTrace, Objective, Placement, Plant, Spectrum, StabilityReport,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use crate::exit::{CliError, CliResult};
use crate::problem::Problem;
use crate::report::{self, format_f64};

/// Placement used by commands that evaluate a single design.
fn design(p: &Problem) -> Placement<f64> {
    p.placement.clone().unwrap_or_else(|| draw_start(&p.plant, p.seed, 0))
}

fn header(p: &Problem) -> Value {
    json!({
        "n": p.plant.n(),
        "epsilon": p.plant.epsilon(),
        "delta": p.plant.delta(),
        "A": report::matrix(p.plant.a()),
    })
}

pub fn solve(p: &Problem, out: &Path) -> CliResult<()> {
    let pl = design(p);
    let (stab, det) = pbh_reports(&p.plant, &pl)?;
    let pbh = json!({ "stabilizability": report::pbh(&stab), "detectability": report::pbh(&det) });
    let r = match cost_report(&p.plant, &pl) {
        Ok(r) => r,
        Err(e) => {
            report::write_json(out, "solve.json", &json!({ "problem": header(p), "placement": report::placement(&pl), "pbh": pbh }))?;
            return Err(e.into());
        }
    };
    let doc = json!({
        "problem": header(p),
        "placement": report::placement(&pl),
        "phi": r.phi,
        "phi_bar": r.phi_bar,
        "K": report::matrix(&r.gains.k),
        "Sigma": report::matrix(&r.gains.sigma),
        "M": report::matrix(&r.adjoints.m),
        "N": report::matrix(&r.adjoints.n),
        "residual_k": r.gains.residual_k,
        "residual_sigma": r.gains.residual_sigma,
        "pbh": pbh,
    });
    report::write_json(out, "solve.json", &doc)
}

/// Strictly negative spectrum, treating eigenvalues within roundoff of zero as zero.
fn clearly_hurwitz(spec: &Spectrum<f64>) -> bool {
    spec.require_negative().is_ok() && spec.lambda[0] < -1e-12 * (1.0 + spec.lambda.amax())
}

fn stability_json(r: &StabilityReport<f64>) -> Value {
    json!({ "stability": r.stability, "hessian_eigs": r.hessian_eigs, "asymmetry": r.asymmetry })
}

fn run_json(index: usize, t: &FlowTrace<f64>) -> Value {
    let last = t.last();
    json!({
        "index": index,
        "status": t.status,
        "iterations": t.iterates.len().saturating_sub(1),
        "phi": last.map(|it| it.phi),
        "objective_value": last.map(|it| it.objective),
        "grad_norm": last.map(|it| it.grad_norm),
        "placement": report::placement(&t.final_placement),
        "failure": t.failure.as_ref().map(|(pl, e)| json!({ "placement": report::placement(pl), "message": e.to_string() })),
    })
}

pub fn flow(p: &Problem, out: &Path) -> CliResult<()> {
    if p.starts == 0 {
        return Err(CliError::Usage("--starts must be at least 1".into()));
    }
    let runs = multi_start(&p.plant, p.starts, p.seed, &p.flow)?;
    let best = runs.best();
    let n = p.plant.n();

    let mut cols = vec!["iter".to_string(), "phi".into(), "grad_norm".into(), "step".into()];
    cols.extend((1..=n).map(|i| format!("b{i}")));
    cols.extend((1..=n).map(|i| format!("c{i}")));
    let rows: Vec<Vec<String>> = best
        .iterates
        .iter()
        .enumerate()
        .map(|(k, it)| {
            let mut r = vec![k.to_string(), format_f64(it.phi), format_f64(it.grad_norm), format_f64(it.step)];
            r.extend(it.placement.b().iter().map(|&v| format_f64(v)));
            r.extend(it.placement.c().iter().map(|&v| format_f64(v)));
            r
        })
        .collect();
    report::write_csv(out, "trace.csv", &cols, &rows)?;

    let pl = &best.final_placement;
    let eq = is_equilibrium(&p.plant, pl, SYSTEM_RESIDUAL)?;
    let (stability, stability_error) = match classify_stability(&p.plant, pl, DEFAULT_FD_STEP) {
        Ok(r) => (stability_json(&r), Value::Null),
        Err(e) => (Value::Null, json!(e.to_string())),
    };
    let mut best_json = run_json(runs.best_index, best);
    best_json["equilibrium"] = json!({
        "residual_b": eq.residual_b,
        "residual_c": eq.residual_c,
        "is_equilibrium": eq.is_equilibrium,
    });
    best_json["stability"] = stability;
    best_json["stability_error"] = stability_error;
    let doc = json!({
        "problem": header(p),
        "objective": Objective::for_plant(&p.plant),
        "seed": p.seed,
        "starts": p.starts,
        "best_index": runs.best_index,
        "best": best_json,
        "runs": runs.all.iter().enumerate().map(|(i, t)| run_json(i, t)).collect::<Vec<_>>(),
    });
    report::write_json(out, "flow.json", &doc)
}

fn candidate_json(
    plant: &Plant<f64>,
    pl: &Placement<f64>,
    extra: Value,
    stab: Option<&StabilityReport<f64>>,
) -> CliResult<Value> {
    let mut v = extra;
    v["placement"] = report::placement(pl);
    v["phi"] = json!(phi(plant, pl)?);
    v["phi_bar"] = json!(phi_bar(plant, pl)?);
    v["stability"] = stab.map(stability_json).unwrap_or(Value::Null);
    Ok(v)
}

pub fn equilibria(p: &Problem, out: &Path) -> CliResult<()> {
    let n = p.plant.n();
    if n > ENUMERATION_CAP {
        return Err(CodesignError::DimensionTooLarge { n, cap: ENUMERATION_CAP }.into());
    }
    let spec = Spectrum::of_plant(&p.plant)?;
    let spectrum = json!({ "lambda": report::vector(&spec.lambda), "theta": report::matrix(&spec.theta) });
    // `excluded` lists singular support blocks, or eigenvector pairs failing PBH.
    let (mode, candidates, excluded) = if clearly_hurwitz(&spec) {
        let zero = p.plant.with_gains(0.0, 0.0)?;
        let mut en = enumerate_equilibria_zero(&spec)?;
        en.classify(&zero, DEFAULT_FD_STEP)?;
        let cands = en
            .candidates
            .iter()
            .map(|c| {
                let extra = json!({
                    "kind": c.kind,
                    "support_beta": c.support_beta,
                    "support_gamma": c.support_gamma,
                    "sign_s": c.sign_s,
                    "xi": c.xi.as_ref().map(report::vector),
                    "beta": report::vector(&c.coords.beta),
                    "gamma": report::vector(&c.coords.gamma),
                    "residual": c.residual,
                });
                candidate_json(&zero, &c.placement, extra, c.stability.as_ref())
            })
            .collect::<CliResult<Vec<_>>>()?;
        let singular: Vec<Value> = en
            .singular_blocks
            .iter()
            .map(|(s, sign)| json!({ "support": s, "sign_s": sign }))
            .collect();
        ("zero_gain_enumeration", cands, singular)
    } else {
        // Eigenvector pairs are equilibria at any gain for symmetric A.
        let mut cands = Vec::with_capacity(n * n);
        let mut infeasible = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let pl = Placement::new(spec.v(i), spec.v(j))?.canonical();
                let (stab, det) = pbh_reports(&p.plant, &pl)?;
                if !(stab.pass && det.pass) {
                    infeasible.push(json!({ "eigen_b": i, "eigen_c": j, "stabilizable": stab.pass, "detectable": det.pass }));
                    continue;
                }
                let st = classify_stability(&p.plant, &pl, DEFAULT_FD_STEP)?;
                let extra = json!({ "eigen_b": i, "eigen_c": j });
                cands.push(candidate_json(&p.plant, &pl, extra, Some(&st))?);
            }
        }
        ("eigenvector_pairs", cands, infeasible)
    };
    let stable = candidates.iter().filter(|c| c["stability"]["stability"] == "stable").count();
    let doc = json!({
        "problem": header(p),
        "mode": mode,
        "spectrum": spectrum,
        "candidates": candidates,
        "excluded": excluded,
        "stable_count": stable,
        "analytic_minimum": analytic_minimum(&spec, p.plant.epsilon(), p.plant.delta()).ok(),
    });
    report::write_json(out, "equilibria.json", &doc)
}

pub fn simulate(p: &Problem, out: &Path) -> CliResult<()> {
    p.sim.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let pl = design(p);
    let r = estimate_eta(&p.plant, &pl, &p.sim)?;
    let doc = json!({
        "problem": header(p),
        "placement": report::placement(&pl),
        "config": {
            "dt": p.sim.dt,
            "horizon_t": p.sim.horizon_t,
            "burn_in": p.sim.burn_in,
            "n_paths": p.sim.n_paths,
            "seed": p.sim.seed,
        },
        "eta_hat": r.eta_hat,
        "stderr": r.stderr,
        "stderr_defined": r.stderr_defined,
        "phi_reference": r.phi_reference,
        "z_score": r.z_score(),
        "diverged": r.diverged,
        "per_path": r.per_path,
    });
    report::write_json(out, "simulate.json", &doc)
}

const VERIFY_RANDOM_PLACEMENTS: usize = 4;
const VERIFY_DIRECTIONS: usize = 5;

struct Check {
    name: &'static str,
    status: &'static str,
    measured: Option<f64>,
    threshold: f64,
    detail: String,
}

impl Check {
    fn measured(name: &'static str, measured: f64, threshold: f64, detail: String) -> Self {
        let status = if measured <= threshold { "pass" } else { "fail" };
        Self { name, status, measured: Some(measured), threshold, detail }
    }

    fn skipped(name: &'static str, threshold: f64, detail: String) -> Self {
        Self { name, status: "skipped", measured: None, threshold, detail }
    }

    fn json(&self) -> Value {
        json!({
            "name": self.name,
            "status": self.status,
            "measured": self.measured,
            "threshold": self.threshold,
            "detail": self.detail,
        })
    }
}

fn central(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

fn forward(f: &impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (-3.0 * f(x) + 4.0 * f(x + h) - f(x + 2.0 * h)) / (2.0 * h)
}

/// Richardson-extrapolated derivative; one-sided when `x − h` would leave the domain.
fn derivative(f: impl Fn(f64) -> f64, x: f64, h: f64, lower: f64) -> f64 {
    if x - h >= lower {
        (4.0 * central(&f, x, h / 2.0) - central(&f, x, h)) / 3.0
    } else {
        (4.0 * forward(&f, x, h / 2.0) - forward(&f, x, h)) / 3.0
    }
}

fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn skew(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    (&g - g.transpose()) * 0.5
}

fn check_gradient(plant: &Plant<f64>, pls: &[Placement<f64>], seed: u64, inject: bool) -> CliResult<Check> {
    let n = plant.n();
    let objective = Objective::for_plant(plant);
    let kappa = match objective {
        Objective::Cost => plant.eps_delta(),
        Objective::Potential => 1.0,
    };
    let value = |pl: &Placement<f64>| -> codesign_core::Result<f64> {
        match objective {
            Objective::Cost => phi(plant, pl),
            Objective::Potential => phi_bar(plant, pl),
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX - 1);
    let h = 1e-3;
    let mut worst: f64 = 0.0;
    for pl in pls {
        let g = gradient(plant, pl, false)?;
        let floor = 1e-6 * (1.0 + value(pl)?.abs());
        let factor = 2.0 * kappa / g.scale * if inject { -1.0 } else { 1.0 };
        for _ in 0..VERIFY_DIRECTIONS {
            let (ob, oc) = (skew(n, &mut rng), skew(n, &mut rng));
            let curve = |t: f64| {
                let b = (&ob * -t).exp() * pl.b();
                let c = (&oc * -t).exp() * pl.c();
                Placement::from_unnormalized(b, c).and_then(|q| value(&q)).unwrap_or(f64::NAN)
            };
            let fd = derivative(curve, 0.0, h, f64::NEG_INFINITY);
            let from_grad = factor * (g.g_b.dot(&(-&ob * pl.b())) + g.g_c.dot(&(-&oc * pl.c())));
            let e = rel_err(from_grad, fd, floor);
            worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
        }
    }
    let name = match objective {
        Objective::Cost => "phi",
        Objective::Potential => "phi_bar",
    };
    Ok(Check::measured(
        "gradient_vs_finite_difference",
        worst,
        1e-5,
        format!("{} placements x {VERIFY_DIRECTIONS} tangent directions of {name}", pls.len()),
    ))
}

fn check_gain_signs(plant: &Plant<f64>, pls: &[Placement<f64>]) -> CliResult<(Check, Check)> {
    let (r, s) = (plant.epsilon(), plant.delta());
    let h = if r.min(s) > 0.0 { 1e-2 * r.min(s) } else { 1e-2 };
    let mut max_deriv = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for pl in pls {
        let sens = phi_gain_sensitivity(plant, pl)?;
        let floor = 1e-6 * (1.0 + phi(plant, pl)?.abs());
        max_deriv = max_deriv.max(sens.dphi_dr).max(sens.dphi_ds);
        let at = |e: f64, d: f64| plant.with_gains(e, d).and_then(|q| phi(&q, pl)).unwrap_or(f64::NAN);
        let fd_r = derivative(|x| at(x, s), r, h, 0.0);
        let fd_s = derivative(|x| at(r, x), s, h, 0.0);
        for (an, fd) in [(sens.dphi_dr, fd_r), (sens.dphi_ds, fd_s)] {
            let e = rel_err(an, fd, floor);
            worst = if e.is_nan() { f64::INFINITY } else { worst.max(e) };
        }
    }
    Ok((
        Check::measured("gain_sensitivity_nonpositive", max_deriv, 1e-10, "max of dPhi/dr, dPhi/ds".into()),
        Check::measured("gain_sensitivity_vs_finite_difference", worst, 1e-6, "relative error".into()),
    ))
}

fn check_phi_bar(plant: &Plant<f64>, pls: &[Placement<f64>]) -> CliResult<Check> {
    let name = "phi_bar_nonpositive";
    let hurwitz = Spectrum::of_plant(plant).map(|s| clearly_hurwitz(&s)).unwrap_or(false);
    if !hurwitz {
        return Ok(Check::skipped(name, 1e-10, "requires symmetric Hurwitz A".into()));
    }
    let zero = plant.with_gains(0.0, 0.0)?;
    let mut max_val = f64::NEG_INFINITY;
    let mut spread: f64 = 0.0;
    for pl in pls {
        let f = phi_bar_forms(&zero, pl)?;
        max_val = max_val.max(f.trace).max(f.via_actuator).max(f.via_sensor);
        let scale = 1.0 + f.trace.abs();
        spread = spread.max((f.trace - f.via_actuator).abs() / scale).max((f.trace - f.via_sensor).abs() / scale);
    }
    let measured = if spread <= 1e-9 { max_val } else { f64::INFINITY };
    Ok(Check::measured(
        name,
        measured,
        1e-10,
        format!("zero-gain potential; max spread between equivalent forms {spread:.3e}"),
    ))
}

fn check_analytic(plant: &Plant<f64>) -> CliResult<Check> {
    let name = "analytic_vs_numeric_gains";
    let Ok(spec) = Spectrum::of_plant(plant) else {
        return Ok(Check::skipped(name, 1e-9, "requires symmetric A".into()));
    };
    let (e, d) = (plant.epsilon(), plant.delta());
    let a = match (analytic_gains_at_v1(&spec, e, d), analytic_minimum(&spec, e, d)) {
        (Ok(a), Ok(m)) => (a, m),
        (Err(err), _) | (_, Err(err)) => return Ok(Check::skipped(name, 1e-9, err.to_string())),
    };
    let (g, min) = a;
    let pl = Placement::new(spec.v(0), spec.v(0))?;
    let gains = gain_pair(plant, &pl)?;
    let adj = adjoint_pair(plant, &pl, &gains)?;
    let conj = |m: &DMatrix<f64>| spec.theta.transpose() * m * &spec.theta;
    let mut worst: f64 = 0.0;
    for (num, diag) in [(&gains.k, &g.k), (&gains.sigma, &g.sigma), (&adj.m, &g.m), (&adj.n, &g.n)] {
        let expect = DMatrix::from_diagonal(diag);
        worst = worst.max((conj(num) - &expect).norm() / (1.0 + expect.norm()));
    }
    let numeric = phi(plant, &pl)?;
    worst = worst.max((numeric - min).abs() / (1.0 + min.abs()));
    Ok(Check::measured(name, worst, 1e-9, "gains, adjoints and Phi at (v1, v1)".into()))
}

pub fn verify(p: &Problem, out: &Path, inject_wrong_gradient: bool) -> CliResult<()> {
    let mut pls: Vec<Placement<f64>> = p.placement.iter().cloned().collect();
    pls.extend((0..VERIFY_RANDOM_PLACEMENTS).map(|i| draw_start(&p.plant, p.seed, i)));
    let (signs, sens_fd) = check_gain_signs(&p.plant, &pls)?;
    let checks = [
        check_gradient(&p.plant, &pls, p.seed, inject_wrong_gradient)?,
        signs,
        sens_fd,
        check_phi_bar(&p.plant, &pls)?,
        check_analytic(&p.plant)?,
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| c.status == "fail").map(|c| c.name).collect();
    let doc = json!({
        "problem": header(p),
        "placements": pls.iter().map(report::placement).collect::<Vec<_>>(),
        "checks": checks.iter().map(Check::json).collect::<Vec<_>>(),
        "pass": failed.is_empty(),
    });
    report::write_json(out, "verify.json", &doc)?;
    for c in &checks {
        eprintln!("{:<40} {}", c.name, c.status);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("failed checks: {}", failed.join(", "))))
    }
}
