//! Property-based checks of the building blocks, plus a few invariants of
//! whole solves.

use pbf::analysis::{estimate_order, optimality_gap};
use pbf::benchmarks;
use pbf::bolza::{convert_bolza, BolzaDims, BolzaModel, BolzaProblem, EndTime};
use pbf::collocation::detect_ringing;
use pbf::fem::{best_approximation, legendre_eval, norm_equivalence_bound_check, FESpace, Trajectory};
use pbf::mesh::Mesh;
use pbf::problem::{feasibility_residual_exact, AlgebraicKind, DaeModel, Dims, DynamicProblem};
use pbf::quadrature::{gauss_legendre, integrate_on_mesh};
use pbf::run::{solve_benchmark, Method};
use pbf::scalar::Scalar;
use pbf::solver::SolverConfig;
use pbf::transcription::{default_rule, interior_push, PenaltyBarrierParams, TranscribedNlp};
use proptest::prelude::*;

fn poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn poly_integral(coeffs: &[f64], a: f64, b: f64) -> f64 {
    coeffs.iter().enumerate().map(|(k, c)| c * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k + 1) as f64).sum()
}

fn coeffs(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, 1..=max_len)
}

/// `ẏ = z - y` with `f = y² + z`, `y(0) = 1`, `z ≥ 0`.
struct Relax;

impl DaeModel for Relax {
    fn objective<S: Scalar>(&self, _yd: &[S], y: &[S], z: &[S], _t: f64) -> S {
        y[0].square() + z[0]
    }
    fn residual<S: Scalar>(&self, yd: &[S], y: &[S], z: &[S], _t: f64, out: &mut [S]) {
        out[0] = yd[0] + y[0] - z[0];
    }
    fn point_constraints<S: Scalar>(&self, yp: &[S], out: &mut [S]) {
        out[0] = yp[0] - 1.0;
    }
}

fn relax() -> DynamicProblem {
    DynamicProblem::new("relax", Dims { n_y: 1, n_z: 1, n_c: 1, n_b: 1 }, (0.0, 2.0), vec![0.0], Relax).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gauss_rules_are_exact_to_degree_2n_minus_1(n in 1usize..=20, raw in coeffs(40), a in -3.0..3.0f64, len in 0.1..4.0f64) {
        let c = &raw[..raw.len().min(2 * n)];
        let b = a + len;
        let exact = poly_integral(c, a, b);
        let q = gauss_legendre(n).integrate(a, b, |t| poly(c, t));
        prop_assert!((q - exact).abs() <= 1e-12 * (1.0 + exact.abs()), "n = {n}: {q} vs {exact}");
    }

    #[test]
    fn composite_rule_is_consistent_with_splitting(c in coeffs(8), a in -2.0..2.0f64, len in 0.1..3.0f64, frac in 0.1..0.9f64) {
        let rule = gauss_legendre(4);
        let b = a + len;
        let m = a + frac * len;
        let whole = integrate_on_mesh(&Mesh::new(vec![a, b]).unwrap(), &rule, |t| poly(&c, t)).unwrap();
        let split = integrate_on_mesh(&Mesh::new(vec![a, m, b]).unwrap(), &rule, |t| poly(&c, t)).unwrap();
        prop_assert!((whole - split).abs() <= 1e-13 * (1.0 + whole.abs()));
    }

    #[test]
    fn norm_equivalence_holds(p in 0usize..=8, raw in coeffs(9), a in -5.0..5.0f64, len in 0.01..3.0f64) {
        let c = &raw[..raw.len().min(p + 1)];
        let chk = norm_equivalence_bound_check(c, (a, a + len), p).unwrap();
        prop_assert!(chk.bound_satisfied, "{chk:?}");
    }

    #[test]
    fn projection_reproduces_polynomials(p in 1usize..=6, raw in coeffs(7), n in 1usize..5) {
        let c = raw[..raw.len().min(p + 1)].to_vec();
        let space = FESpace::new(Mesh::uniform(-1.0, 2.0, n).unwrap(), p, 1, 1, false).unwrap();
        let proj = best_approximation(&space, |t| vec![poly(&c, t), poly(&c, t)]).unwrap();
        for k in 0..=20 {
            let t = -1.0 + 3.0 * k as f64 / 20.0;
            let v = proj.evaluate(t, 0).unwrap();
            prop_assert!((v[0] - poly(&c, t)).abs() < 1e-10 && (v[1] - poly(&c, t)).abs() < 1e-10);
        }
    }

    #[test]
    fn continuous_components_match_exactly_at_nodes(seed in any::<u64>(), p in 1usize..=5, n in 2usize..6) {
        let space = FESpace::new(Mesh::uniform(0.0, 1.0, n).unwrap(), p, 2, 1, true).unwrap();
        let mut state = seed;
        let coeffs: Vec<f64> = (0..space.dim()).map(|_| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }).collect();
        let traj = Trajectory::new(space.clone(), coeffs).unwrap();
        for i in 0..n - 1 {
            let t = space.mesh().nodes()[i + 1];
            for c in 0..3 {
                prop_assert_eq!(traj.component_in(i, t, c), traj.component_in(i + 1, t, c));
            }
        }
    }

    #[test]
    fn feasibility_residual_is_nonnegative_and_detects_infeasibility(c in coeffs(4), z in -2.0..2.0f64) {
        let problem = relax();
        let space = FESpace::new(Mesh::uniform(0.0, 2.0, 3).unwrap(), 3, 1, 1, false).unwrap();
        let traj = Trajectory::interpolate(space, |t| vec![poly(&c, t), z]);
        let r = feasibility_residual_exact(&problem, &traj, 10).unwrap();
        prop_assert!(r >= 0.0);
        // feasible exactly when y = z + (1 - z) e^{-t}, which no polynomial is unless y ≡ z = 1
        let feasible = (c[0] - 1.0).abs() < 1e-12 && c[1..].iter().all(|v| v.abs() < 1e-12) && (z - 1.0).abs() < 1e-12;
        prop_assert_eq!(r == 0.0, feasible);
    }

    #[test]
    fn quadrature_is_exact_for_polynomial_integrands(seed in any::<u64>(), p in 1usize..=4) {
        // f = y² + z and ‖c‖² have degree ≤ 2p, within the exactness of the default rule
        let problem = relax();
        let space = FESpace::new(Mesh::uniform(0.0, 2.0, 3).unwrap(), p, 1, 1, false).unwrap();
        let mut state = seed | 1;
        let x: Vec<f64> = (0..space.dim()).map(|_| {
            state ^= state << 13; state ^= state >> 7; state ^= state << 17;
            (state % 2000) as f64 / 1000.0 - 1.0
        }).collect();
        let traj = Trajectory::new(space.clone(), x.clone()).unwrap();
        let nlp = TranscribedNlp::fem(problem.clone(), &space, &default_rule(p), PenaltyBarrierParams::new(0.1, 0.1).unwrap()).unwrap();
        let fine = gauss_legendre(4 * p + 8);
        let f_exact = integrate_on_mesh(space.mesh(), &fine, |t| {
            let v = traj.evaluate(t, 0).unwrap();
            v[0] * v[0] + v[1]
        }).unwrap();
        let f_h = nlp.objective(&x).unwrap();
        prop_assert!((f_h - f_exact).abs() <= 1e-12 * (1.0 + f_exact.abs()));
        let r_h: f64 = nlp.constraints(&x).unwrap().iter().map(|c| c * c).sum();
        let r_exact = feasibility_residual_exact(&problem, &traj, 4 * p + 8).unwrap();
        prop_assert!((r_h - r_exact).abs() <= 1e-12 * (1.0 + r_exact.abs()));
    }

    #[test]
    fn merit_is_finite_iff_barrier_nodes_are_positive(vals in prop::collection::vec(-0.5..2.0f64, 8)) {
        let problem = relax();
        let space = FESpace::new(Mesh::uniform(0.0, 2.0, 2).unwrap(), 3, 1, 1, false).unwrap();
        let mut x = vec![0.5; space.dim()];
        for (d, v) in space.z_component_dofs(0).into_iter().zip(&vals) {
            x[d] = *v;
        }
        let nlp = TranscribedNlp::fem_default(problem, &space, PenaltyBarrierParams::new(0.1, 0.1).unwrap()).unwrap();
        let positive = nlp.barrier_values(&x).iter().all(|&(_, _, v)| v > 0.0);
        let finite = nlp.merit(&x).map(f64::is_finite).unwrap_or(false);
        prop_assert_eq!(finite, positive);
    }

    #[test]
    fn order_estimates_recover_synthetic_orders(q in 0.2..6.0f64, c in 0.01..100.0f64, h0 in 0.05..1.0f64) {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| {
            let h = h0 * 0.5f64.powi(k);
            (h, c * h.powf(q))
        }).collect();
        prop_assert!((estimate_order(&pts).unwrap() - q).abs() <= 1e-12 * q.max(1.0) * 10.0);
    }

    #[test]
    fn optimality_gap_is_nonnegative(f in -1e3..1e3f64, r in -1e3..1e3f64) {
        let g = optimality_gap(f, r);
        prop_assert!(g >= 0.0);
        if f <= r {
            prop_assert_eq!(g, 0.0);
        }
    }

    #[test]
    fn interior_push_is_a_floor(vals in prop::collection::vec(-3.0..3.0f64, 0..20), th in 1e-12..1.0f64) {
        let out = interior_push(&vals, th);
        for (v, o) in vals.iter().zip(&out) {
            prop_assert!(*o >= th && (*o == *v || *v < th));
        }
        prop_assert_eq!(interior_push(&out, th), out);
    }

    #[test]
    fn smooth_samples_do_not_ring(c in coeffs(4), n in 20usize..400) {
        // second differences of a cubic are linear: at most one sign change
        let s: Vec<f64> = (0..n).map(|k| poly(&c, -1.0 + 2.0 * k as f64 / (n - 1) as f64)).collect();
        prop_assert!(detect_ringing(&s).unwrap() <= 1.0 / n as f64 + 1e-15);
    }

    #[test]
    fn bolza_conversion_preserves_the_cost(a in -2.0..2.0f64, slope in -2.0..2.0f64, t0 in -1.0..1.0f64, len in 0.5..3.0f64) {
        let te = t0 + len;
        let dims = BolzaDims { n_chi: 1, n_u: 1, n_xi: 0, n_e: 1, n_i: 0, n_bb: 1 };
        let mut b = BolzaProblem::new("lq", dims, Lq, (t0, te));
        b.tau0 = EndTime::Free(t0);
        b.tau_end = EndTime::Free(te);
        let (p, l) = convert_bolza(b).unwrap();
        // χ(τ) = a + slope (τ - t0), υ = slope, split into positive parts
        let chi_end = a + slope * len;
        let (up, um) = (slope.max(0.0) + 0.5, (-slope).max(0.0) + 0.5);
        let rule = gauss_legendre(6);
        let mut converted = 0.0;
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            let t = 0.5 * (x + 1.0);
            let mut y = vec![0.0; p.n_y];
            y[0] = a + slope * len * t;
            y[l.kappa] = chi_end * chi_end;
            y[l.tau0] = t0;
            y[l.tau_end] = te;
            let mut ydot = vec![0.0; p.n_y];
            ydot[0] = slope * len;
            let z = [up, um];
            let c = p.evaluate_dae_residual(&ydot, &y, &z, t).unwrap();
            prop_assert!(c.iter().all(|v| v.abs() < 1e-12), "{c:?}");
            converted += 0.5 * w * p.evaluate_objective(&ydot, &y, &z, t).unwrap();
        }
        let running = ((a + slope * len).powi(3) - a.powi(3)) / (3.0 * slope.abs().max(1e-300)) * slope.signum();
        let running = if slope.abs() < 1e-9 { a * a * len } else { running } + slope * slope * len;
        let bolza = running + chi_end * chi_end;
        prop_assert!((converted - bolza).abs() <= 1e-10 * (1.0 + bolza.abs()), "{converted} vs {bolza}");
    }
}

struct Lq;

impl BolzaModel for Lq {
    fn running<S: Scalar>(&self, _cd: &[S], chi: &[S], u: &[S], _xi: &[S], _tau: S) -> S {
        chi[0] * chi[0] + u[0] * u[0]
    }
    fn terminal<S: Scalar>(&self, chi: &[S], _tau_end: S) -> S {
        chi[0] * chi[0]
    }
    fn equalities<S: Scalar>(&self, cd: &[S], _chi: &[S], u: &[S], _xi: &[S], _tau: S, out: &mut [S]) {
        out[0] = cd[0] - u[0];
    }
    fn boundary<S: Scalar>(&self, c0: &[S], _ce: &[S], _t0: S, _te: S, out: &mut [S]) {
        out[0] = c0[0];
    }
}

#[test]
fn legendre_polynomials_are_orthogonal() {
    let rule = gauss_legendre(20);
    for j in 0..=12 {
        for k in 0..=12 {
            let v: f64 = rule.nodes.iter().zip(&rule.weights).map(|(&x, w)| w * legendre_eval(j, x) * legendre_eval(k, x)).sum();
            let want = if j == k { 2.0 / (2 * j + 1) as f64 } else { 0.0 };
            assert!((v - want).abs() < 1e-14, "({j}, {k}): {v}");
        }
    }
}

#[test]
fn gauss_weights_are_positive_and_symmetric() {
    for n in 1..=32 {
        let r = gauss_legendre(n);
        for i in 0..n {
            assert!(r.weights[i] > 0.0);
            assert!((r.nodes[i] + r.nodes[n - 1 - i]).abs() < 1e-14);
            assert!((r.weights[i] - r.weights[n - 1 - i]).abs() < 1e-14);
        }
    }
}

#[test]
fn iterates_stay_interior_and_descend() {
    let b = benchmarks::build("vanderpol").unwrap();
    let rep = solve_benchmark(&b, Method::Pbf, 20, 4, &SolverConfig::default()).unwrap();
    assert!(rep.status.is_converged());
    for s in &rep.stages {
        for w in s.records.windows(2) {
            assert!(w[1].merit <= w[0].merit, "merit rose from {} to {} at omega {}", w[0].merit, w[1].merit, s.omega);
        }
        assert!(s.records.iter().all(|r| r.min_z > 0.0));
        let l_omega = PenaltyBarrierParams { omega: s.omega, tau: s.tau }.l_omega();
        assert!(s.min_z >= 1e-3 * s.tau / l_omega, "min z {} at omega {}", s.min_z, s.omega);
    }
}

#[test]
fn warm_start_is_no_worse_than_cold_start() {
    for name in ["alychan", "regulator"] {
        let b = benchmarks::build(name).unwrap();
        let warm = solve_benchmark(&b, Method::Pbf, 10, 4, &SolverConfig::default()).unwrap();
        let cold_cfg = SolverConfig { continuation_start: 1e-10, ..SolverConfig::default() };
        let cold = solve_benchmark(&b, Method::Pbf, 10, 4, &cold_cfg).unwrap();
        assert!(warm.r_feas <= 10.0 * cold.r_feas.max(1e-30), "{name}: warm {:e} cold {:e}", warm.r_feas, cold.r_feas);
    }
}

#[test]
fn pendulum_refinement_is_monotone() {
    let b = benchmarks::build("pendulum-a").unwrap();
    let reference = b.reference_objective.as_ref().unwrap().value;
    let mut prev: Option<(f64, f64)> = None;
    for n in [10, 20, 40, 80] {
        let rep = solve_benchmark(&b, Method::Pbf, n, 5, &SolverConfig::default()).unwrap();
        let g = optimality_gap(rep.objective, reference);
        if let Some((pg, pr)) = prev {
            assert!(g <= 1.1 * pg + 1e-12 && rep.r_feas <= 1.1 * pr, "n = {n}: g_opt {g:e} after {pg:e}, r_feas {:e} after {pr:e}", rep.r_feas);
        }
        prev = Some((g, rep.r_feas));
    }
}

#[test]
fn converted_bounds_round_trip() {
    // the barrier acts at the quadrature nodes, so that is where the slacks
    // of a boxed benchmark must be nonnegative and |u| ≤ 1
    let b = benchmarks::build("vanderpol").unwrap();
    let p = 4;
    let rep = solve_benchmark(&b, Method::Pbf, 20, p, &SolverConfig::default()).unwrap();
    let rule = default_rule(p);
    for (i, (lo, hi)) in rep.trajectory.space().mesh().intervals().enumerate() {
        for x in &rule.nodes {
            let t = lo + 0.5 * (hi - lo) * (x + 1.0);
            let z = [rep.trajectory.component_in(i, t, 2), rep.trajectory.component_in(i, t, 3)];
            let u = (b.control)(&[], &z);
            assert!(u.abs() <= 1.0 + 1e-8, "u({t}) = {u}");
            assert!(z.iter().all(|s| *s > 0.0), "slacks {z:?} at {t}");
        }
    }
    assert!(relax().z_kinds == vec![AlgebraicKind::Nonnegative]);
}
