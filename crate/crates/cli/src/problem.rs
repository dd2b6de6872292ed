//! Problem files.
//!
//! ```json
//! {
//!   "A": [[-1.0, 0.0], [0.0, -2.0]],
//!   "epsilon": 0.01,
//!   "delta": 0.01,
//!   "placement": {"b": [1, 0], "c": [1, 0]},
//!   "flow": {"grad_tol": 1e-10, "rescaled": true},
//!   "sim": {"dt": 0.001, "horizon_t": 200, "burn_in": 20, "n_paths": 64},
//!   "seed": 7,
//!   "starts": 10
//! }
//! ```
//!
//! `A` is either dense rows or a generator object:
//! `{"generator": "diag", "eigenvalues": [...]}`,
//! `{"generator": "laplacian", "nodes": n, "edges": [[i, j, w], ...]}` (gives `A = −L`),
//! or `{"generator": "random_symmetric", "n": n}` (seeded by `seed`).

use std::path::Path;

use codesign_core::{FlowOptions, Placement, Plant, SimConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Deserialize;

use crate::exit::{CliError, CliResult};

pub const DEFAULT_STARTS: usize = 10;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemFile {
    #[serde(rename = "A")]
    a: MatrixSpec,
    epsilon: f64,
    delta: f64,
    #[serde(default)]
    placement: Option<PlacementSpec>,
    #[serde(default)]
    flow: FlowSpec,
    #[serde(default)]
    sim: SimSpec,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    starts: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MatrixSpec {
    Dense(Vec<Vec<f64>>),
    Generated(Generator),
}

#[derive(Debug, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case")]
enum Generator {
    Diag { eigenvalues: Vec<f64> },
    Laplacian { nodes: usize, edges: Vec<(usize, usize, f64)> },
    RandomSymmetric { n: usize },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlacementSpec {
    b: Vec<f64>,
    c: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FlowSpec {
    step_init: f64,
    step_min: f64,
    step_max: f64,
    grad_tol: f64,
    max_iters: usize,
    rescaled: bool,
}

impl Default for FlowSpec {
    fn default() -> Self {
        let d = FlowOptions::<f64>::default();
        Self {
            step_init: d.step_init,
            step_min: d.step_min,
            step_max: d.step_max,
            grad_tol: d.grad_tol,
            max_iters: d.max_iters,
            rescaled: d.rescaled,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimSpec {
    dt: f64,
    horizon_t: f64,
    n_paths: usize,
    burn_in: f64,
    seed: Option<u64>,
}

impl Default for SimSpec {
    fn default() -> Self {
        let d = SimConfig::<f64>::default();
        Self {
            dt: d.dt,
            horizon_t: d.horizon_t,
            n_paths: d.n_paths,
            burn_in: d.burn_in,
            seed: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Problem {
    pub plant: Plant<f64>,
    pub placement: Option<Placement<f64>>,
    pub flow: FlowOptions<f64>,
    pub sim: SimConfig<f64>,
    pub seed: u64,
    pub starts: usize,
}

fn parse_err(msg: impl Into<String>) -> CliError {
    CliError::Parse(msg.into())
}

fn dense(rows: &[Vec<f64>]) -> CliResult<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(parse_err("\"A\" must be a nonempty square array of rows"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn laplacian(nodes: usize, edges: &[(usize, usize, f64)]) -> CliResult<DMatrix<f64>> {
    if nodes == 0 {
        return Err(parse_err("laplacian needs at least one node"));
    }
    let mut l = DMatrix::zeros(nodes, nodes);
    for &(i, j, w) in edges {
        if i >= nodes || j >= nodes || i == j {
            return Err(parse_err(format!("invalid laplacian edge ({i}, {j})")));
        }
        if !(w >= 0.0) || !w.is_finite() {
            return Err(parse_err(format!("laplacian edge ({i}, {j}) has invalid weight {w}")));
        }
        l[(i, j)] -= w;
        l[(j, i)] -= w;
        l[(i, i)] += w;
        l[(j, j)] += w;
    }
    Ok(-l)
}

/// Symmetric matrix with eigenvalues drawn from `[-3, -0.2]`, pairwise at
/// least 0.05 apart, and Haar-like random eigenvectors.
fn random_symmetric(n: usize, seed: u64) -> CliResult<DMatrix<f64>> {
    if n == 0 {
        return Err(parse_err("random_symmetric needs n ≥ 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let eigs = loop {
        let mut e: Vec<f64> = (0..n).map(|_| -rng.random_range(0.2..3.0)).collect();
        e.sort_by(|a, b| b.total_cmp(a));
        if e.windows(2).all(|w| w[0] - w[1] > 0.05) {
            break e;
        }
    };
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let q = g.qr().q();
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(eigs)) * q.transpose();
    Ok((&a + a.transpose()) * 0.5)
}

pub fn load(path: &Path, seed: Option<u64>, starts: Option<usize>) -> CliResult<Problem> {
    let text = std::fs::read_to_string(path).map_err(|e| parse_err(format!("cannot read {}: {e}", path.display())))?;
    let file: ProblemFile = serde_json::from_str(&text).map_err(|e| parse_err(format!("invalid problem file: {e}")))?;
    let seed = seed.unwrap_or(file.seed);
    let a = match &file.a {
        MatrixSpec::Dense(rows) => dense(rows)?,
        MatrixSpec::Generated(Generator::Diag { eigenvalues }) => {
            if eigenvalues.is_empty() {
                return Err(parse_err("diag generator needs eigenvalues"));
            }
            DMatrix::from_diagonal(&DVector::from_row_slice(eigenvalues))
        }
        MatrixSpec::Generated(Generator::Laplacian { nodes, edges }) => laplacian(*nodes, edges)?,
        MatrixSpec::Generated(Generator::RandomSymmetric { n }) => random_symmetric(*n, seed)?,
    };
    let plant = Plant::new(a, file.epsilon, file.delta).map_err(|e| parse_err(e.to_string()))?;
    let placement = match &file.placement {
        Some(p) => {
            let pl = Placement::from_unnormalized(DVector::from_row_slice(&p.b), DVector::from_row_slice(&p.c))
                .map_err(|e| parse_err(e.to_string()))?;
            if pl.n() != plant.n() {
                return Err(parse_err(format!("placement has dimension {}, A has {}", pl.n(), plant.n())));
            }
            Some(pl)
        }
        None => None,
    };
    let f = &file.flow;
    let flow = FlowOptions {
        step_init: f.step_init,
        step_min: f.step_min,
        step_max: f.step_max,
        grad_tol: f.grad_tol,
        max_iters: f.max_iters,
        rescaled: f.rescaled,
    };
    flow.validate().map_err(|e| parse_err(e.to_string()))?;
    let s = &file.sim;
    let sim = SimConfig {
        dt: s.dt,
        horizon_t: s.horizon_t,
        n_paths: s.n_paths,
        burn_in: s.burn_in,
        seed: s.seed.unwrap_or(seed),
    };
    Ok(Problem {
        plant,
        placement,
        flow,
        sim,
        seed,
        starts: starts.or(file.starts).unwrap_or(DEFAULT_STARTS),
    })
}
