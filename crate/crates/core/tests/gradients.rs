//! Derivatives of the merit function against finite differences.

mod common;

use common::{curvature_error, gradient_error, random_nlp, rng, METHODS};
use pbf::benchmarks::NAMES;

#[test]
fn merit_gradient_matches_central_differences() {
    let mut rng = rng(11);
    for name in NAMES {
        for method in METHODS {
            let (nlp, x) = random_nlp(name, method, &mut rng);
            let err = gradient_error(&nlp, &x, 30, &mut rng);
            assert!(err <= 1e-6, "{name}/{method}: relative gradient error {err:e}");
        }
    }
}

#[test]
fn exact_curvature_matches_gradient_differences() {
    let mut rng = rng(12);
    for name in NAMES {
        for method in METHODS {
            let (nlp, x) = random_nlp(name, method, &mut rng);
            let err = curvature_error(&nlp, &x, &mut rng);
            assert!(err <= 1e-6, "{name}/{method}: curvature error {err:e}");
        }
    }
}

#[test]
fn assembled_gradient_agrees_with_direct_gradient() {
    let mut rng = rng(13);
    for name in NAMES {
        for method in METHODS {
            let (nlp, x) = random_nlp(name, method, &mut rng);
            let g = nlp.merit_gradient(&x).unwrap();
            let a = nlp.assemble(&x, pbf::transcription::HessianMode::GaussNewton).unwrap();
            let ga = a.merit_gradient(&nlp.layout, nlp.params.omega);
            let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
            let diff = ga.iter().zip(&g).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            assert!(diff <= 1e-9 * scale, "{name}/{method}: assembled gradient differs by {diff:e}");
        }
    }
}
