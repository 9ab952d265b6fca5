//! Shared test helpers.
#![allow(dead_code)]

use pbf::benchmarks;
use pbf::collocation::{transcribe_collocation, CollocationScheme, SchemeKind};
use pbf::fem::FESpace;
use pbf::mesh::Mesh;
use pbf::transcription::{HessianMode, PenaltyBarrierParams, TranscribedNlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const METHODS: [&str; 4] = ["pbf", "tr", "hs", "lgr"];

/// A small NLP for `method` on benchmark `name` and a random point in the
/// barrier domain.
pub fn random_nlp(name: &str, method: &str, rng: &mut ChaCha8Rng) -> (TranscribedNlp, Vec<f64>) {
    let b = benchmarks::build(name).unwrap();
    let p = &b.problem;
    let mesh = Mesh::uniform(p.t0, p.t_end, 3).unwrap();
    let params = PenaltyBarrierParams::new(0.1, 0.05).unwrap();
    let (nlp, barrier_vars) = if method == "pbf" {
        let space = FESpace::new(mesh, 3, p.n_y, p.n_z, false).unwrap();
        let vars: Vec<usize> = p.barrier_components().into_iter().flat_map(|j| space.z_component_dofs(j)).collect();
        (TranscribedNlp::fem_default(p.clone(), &space, params).unwrap(), vars)
    } else {
        let scheme = match method {
            "tr" => CollocationScheme::trapezoidal(),
            "hs" => CollocationScheme::hermite_simpson(),
            _ => CollocationScheme::new(SchemeKind::Lgr, 3).unwrap(),
        };
        let (tr, nlp) = transcribe_collocation(p, &mesh, scheme, params).unwrap();
        let vars: Vec<usize> = p.barrier_components().into_iter().flat_map(|j| tr.z_vars(j)).collect();
        (nlp, vars)
    };
    let mut x: Vec<f64> = (0..nlp.n_vars()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for d in barrier_vars {
        x[d] = rng.gen_range(0.5..1.5);
    }
    (nlp, x)
}

/// Largest relative deviation of the merit gradient from central differences
/// with step `ε^(1/3) (1 + |x_k|)`, over `samples` random coordinates.
pub fn gradient_error(nlp: &TranscribedNlp, x: &[f64], samples: usize, rng: &mut ChaCha8Rng) -> f64 {
    let g = nlp.merit_gradient(x).unwrap();
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let k = rng.gen_range(0..x.len());
        let e = f64::EPSILON.cbrt() * (1.0 + x[k].abs());
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[k] += e;
        xm[k] -= e;
        let fd = (nlp.merit(&xp).unwrap() - nlp.merit(&xm).unwrap()) / (xp[k] - xm[k]);
        worst = worst.max((fd - g[k]).abs() / scale);
    }
    worst
}

/// Relative deviation of the second derivative along a random direction,
/// exact Hessian plus `JᵀJ/ω`, from differences of the gradient.
pub fn curvature_error(nlp: &TranscribedNlp, x: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    let a = nlp.assemble(x, HessianMode::Exact).unwrap();
    let v: Vec<f64> = (0..x.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let jv = a.jacobian_times(&nlp.layout, &v);
    let exact = a.hessian_quadratic(&v) + jv.iter().map(|t| t * t).sum::<f64>() / nlp.params.omega;
    let gv = |s: f64| {
        let xs: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + s * b).collect();
        let gs = nlp.merit_gradient(&xs).unwrap();
        gs.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>()
    };
    let e = 1e-6;
    let fd = (gv(e) - gv(-e)) / (2.0 * e);
    (fd - exact).abs() / exact.abs().max(1.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
