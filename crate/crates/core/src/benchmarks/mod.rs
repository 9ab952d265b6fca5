//! Registered test problems with reference data.
//!
//! Control bounds `-1 ≤ u ≤ 1` are written with two nonnegative slacks
//! `s_lo = 1 + u` and `s_hi = 1 - u`, coupled by `s_lo + s_hi = 2`, so that
//! `u = (s_lo - s_hi) / 2`.

pub mod reference;

use std::f64::consts::FRAC_PI_2;
use std::sync::{Arc, OnceLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fem::{FESpace, Trajectory};
use crate::mesh::Mesh;
use crate::problem::{AlgebraicKind, DaeModel, Dims, DynamicProblem, GuessHints};
use crate::scalar::Scalar;

pub use reference::{RegulatorReference, VanDerPolReference};

/// Registered problem names.
pub const NAMES: [&str; 6] = ["vanderpol", "regulator", "alychan", "pendulum-a", "pendulum-b", "pendulum-c"];

/// Gravity used by the pendulum problems.
pub const GRAVITY: f64 = 9.81;

/// Upper bound on the beam force in pendulum case B.
pub const BEAM_FORCE_BOUND: f64 = 8.0;

/// How a reference was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Closed form, or the optimality conditions solved to round-off.
    Analytic,
    /// Self-converged fine-mesh solve.
    Numerical,
}

type Curve = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type StateCurve = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Reference control, optionally with the matching state.
#[derive(Clone)]
pub struct ReferenceControl {
    pub kind: ReferenceKind,
    pub provenance: String,
    /// Discontinuities of the reference control.
    pub breakpoints: Vec<f64>,
    control: Curve,
    state: Option<StateCurve>,
}

impl ReferenceControl {
    pub fn control(&self, t: f64) -> f64 {
        (self.control)(t)
    }

    pub fn state(&self, t: f64) -> Option<Vec<f64>> {
        self.state.as_ref().map(|s| s(t))
    }

    pub fn has_state(&self) -> bool {
        self.state.is_some()
    }
}

/// Reference optimal objective.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReferenceObjective {
    pub value: f64,
    pub kind: ReferenceKind,
    pub provenance: String,
}

/// A test problem with everything needed to judge a numerical solution.
#[derive(Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub description: &'static str,
    pub problem: DynamicProblem,
    /// Reads the physical control from `(y, z)`.
    pub control: fn(&[f64], &[f64]) -> f64,
    pub reference: Option<ReferenceControl>,
    pub reference_objective: Option<ReferenceObjective>,
    pub switch_times: Vec<f64>,
    /// Interval on which control errors are reported.
    pub error_interval: (f64, f64),
    /// Interval on which ringing is scored.
    pub ringing_interval: (f64, f64),
}

impl std::fmt::Debug for Benchmark {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Benchmark").field("name", &self.name).field("problem", &self.problem).finish_non_exhaustive()
    }
}

/// `u` from the two bound slacks.
pub fn boxed_control(_y: &[f64], z: &[f64]) -> f64 {
    0.5 * (z[0] - z[1])
}

fn pendulum_control(_y: &[f64], z: &[f64]) -> f64 {
    z[1]
}

fn boxed<S: Scalar>(z: &[S]) -> S {
    (z[0] - z[1]) * 0.5
}

struct VanDerPol;

impl DaeModel for VanDerPol {
    fn objective<S: Scalar>(&self, _yd: &[S], y: &[S], _z: &[S], _t: f64) -> S {
        (y[0].square() + y[1].square()) * 0.5
    }
    fn residual<S: Scalar>(&self, yd: &[S], y: &[S], z: &[S], _t: f64, out: &mut [S]) {
        out[0] = yd[0] - y[1];
        out[1] = yd[1] + y[0] - y[1] * y[0].square().rsub(1.0) - boxed(z);
        out[2] = z[0] + z[1] - 2.0;
    }
    fn point_constraints<S: Scalar>(&self, yp: &[S], out: &mut [S]) {
        out[0] = yp[0];
        out[1] = yp[1] - 1.0;
    }
}

/// Double integrator `ÿ1 = u` with objective `½ ∫ (w1·y1² + w2·y2²)`.
struct DoubleIntegrator {
    w1: f64,
    w2: f64,
}

impl DaeModel for DoubleIntegrator {
    fn objective<S: Scalar>(&self, _yd: &[S], y: &[S], _z: &[S], _t: f64) -> S {
        (y[0].square() * self.w1 + y[1].square() * self.w2) * 0.5
    }
    fn residual<S: Scalar>(&self, yd: &[S], y: &[S], z: &[S], _t: f64, out: &mut [S]) {
        out[0] = yd[0] - y[1];
        out[1] = yd[1] - boxed(z);
        out[2] = z[0] + z[1] - 2.0;
    }
    fn point_constraints<S: Scalar>(&self, yp: &[S], out: &mut [S]) {
        out[0] = yp[0];
        out[1] = yp[1] - 1.0;
    }
}

/// Pendulum cases.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PendulumCase {
    /// Index-1 beam force equation.
    A,
    /// Case A with `ξ ≤ 8`.
    B,
    /// Index-3 length constraint `‖χ‖² = 1`.
    C,
}

/// `y = (χ, χ̇)`, `z = (ξ, u)` plus the slack `8 - ξ` in case B.
struct Pendulum {
    case: PendulumCase,
}

impl DaeModel for Pendulum {
    fn objective<S: Scalar>(&self, _yd: &[S], _y: &[S], z: &[S], _t: f64) -> S {
        z[1].square()
    }
    fn residual<S: Scalar>(&self, yd: &[S], y: &[S], z: &[S], _t: f64, out: &mut [S]) {
        let (x1, x2, v1, v2) = (y[0], y[1], y[2], y[3]);
        let (xi, u) = (z[0], z[1]);
        out[0] = yd[0] - v1;
        out[1] = yd[1] - v2;
        out[2] = yd[2] + x1 * xi * 2.0 + x2 * u;
        out[3] = yd[3] + GRAVITY + x2 * xi * 2.0 - x1 * u;
        out[4] = match self.case {
            PendulumCase::A | PendulumCase::B => v1.square() + v2.square() - xi * 2.0 - x2 * GRAVITY,
            PendulumCase::C => x1.square() + x2.square() - 1.0,
        };
        if self.case == PendulumCase::B {
            out[5] = z[2] + xi - BEAM_FORCE_BOUND;
        }
    }
    fn point_constraints<S: Scalar>(&self, yp: &[S], out: &mut [S]) {
        let target = [1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0];
        for k in 0..8 {
            out[k] = yp[k] - target[k];
        }
    }
}

fn vdp_reference() -> Result<&'static VanDerPolReference> {
    static CELL: OnceLock<std::result::Result<VanDerPolReference, String>> = OnceLock::new();
    CELL.get_or_init(|| VanDerPolReference::compute().map_err(|e| e.to_string()))
        .as_ref()
        .map_err(|e| Error::Evaluation { what: e.clone(), t: 0.0 })
}

fn boxed_problem<M: DaeModel + 'static>(name: &str, t_end: f64, model: M) -> Result<DynamicProblem> {
    DynamicProblem::new(name, Dims { n_y: 2, n_z: 2, n_c: 3, n_b: 2 }, (0.0, t_end), vec![0.0], model)?.with_hints(GuessHints {
        y_start: Some(vec![0.0, 1.0]),
        y_end: None,
        z_value: Some(vec![1.0, 1.0]),
    })
}

/// The pendulum problem for one case.
pub fn pendulum_problem(case: PendulumCase) -> Result<DynamicProblem> {
    let (name, n_z) = match case {
        PendulumCase::A => ("pendulum-a", 2),
        PendulumCase::B => ("pendulum-b", 3),
        PendulumCase::C => ("pendulum-c", 2),
    };
    let mut kinds = vec![AlgebraicKind::Free, AlgebraicKind::Free];
    let mut z0 = vec![GRAVITY / 2.0, 0.0];
    if case == PendulumCase::B {
        kinds.push(AlgebraicKind::Nonnegative);
        z0 = vec![4.0, 0.0, BEAM_FORCE_BOUND - 4.0];
    }
    DynamicProblem::new(name, Dims { n_y: 4, n_z, n_c: 4 + n_z - 1, n_b: 8 }, (0.0, 3.0), vec![0.0, 3.0], Pendulum { case })?
        .with_z_kinds(kinds)?
        .with_hints(GuessHints {
            y_start: Some(vec![1.0, 0.0, 0.0, 0.0]),
            y_end: Some(vec![0.0, -1.0, 0.0, 0.0]),
            z_value: Some(z0),
        })
}

/// Self-converged pendulum objectives (p = 5, ω = τ = 1e-12, 400 elements).
/// Case C is case A with the length kept by the index-3 constraint, so it
/// shares the case A optimum.
const PENDULUM_OBJECTIVES: [f64; 3] = [12.873888874206, 18.396063403903, 12.873888874206];

struct Sawtooth;

impl DaeModel for Sawtooth {
    fn objective<S: Scalar>(&self, _yd: &[S], _y: &[S], _z: &[S], _t: f64) -> S {
        S::zero()
    }
    fn residual<S: Scalar>(&self, _yd: &[S], _y: &[S], z: &[S], _t: f64, out: &mut [S]) {
        out[0] = (z[0] * std::f64::consts::PI).sin();
    }
    fn point_constraints<S: Scalar>(&self, _yp: &[S], _out: &mut [S]) {}
}

/// `c(x) = sin(πx)` on `(0, 1)` with one free algebraic component and no states.
pub fn sawtooth_problem() -> Result<DynamicProblem> {
    DynamicProblem::new("sawtooth", Dims { n_y: 0, n_z: 1, n_c: 1, n_b: 0 }, (0.0, 1.0), vec![], Sawtooth)?
        .with_z_kinds(vec![AlgebraicKind::Free])
}

/// Discontinuous piecewise linear `x(t) = -1/h + (2/h)(t - jh)` on `((j-1)h, jh)`.
///
/// Every element midpoint maps to an integer, so the midpoint rule sees
/// `c = 0` everywhere while `∫ sin²(πx) = 1/2`.
pub fn sawtooth_trajectory(n: usize) -> Result<Trajectory> {
    let h = 1.0 / n as f64;
    let space = FESpace::new(Mesh::uniform(0.0, 1.0, n)?, 1, 0, 1, false)?;
    let mut coeffs = vec![0.0; space.dim()];
    for i in 0..n {
        let right = (i + 1) as f64 * h;
        for (l, &xi) in space.basis().nodes().iter().enumerate() {
            let t = i as f64 * h + 0.5 * h * (xi + 1.0);
            coeffs[space.z_dof(i, l, 0)] = -1.0 / h + 2.0 / h * (t - right);
        }
    }
    Trajectory::new(space, coeffs)
}

/// Builds a registered benchmark.
pub fn build(name: &str) -> Result<Benchmark> {
    match name {
        "vanderpol" => {
            let r = vdp_reference()?;
            let (t1, t2) = (r.t1, r.t2);
            Ok(Benchmark {
                name: "vanderpol",
                description: "van der Pol oscillator stabilized by a bounded control; bang-bang then singular",
                problem: boxed_problem("vanderpol", 4.0, VanDerPol)?,
                control: boxed_control,
                reference: Some(ReferenceControl {
                    kind: ReferenceKind::Analytic,
                    provenance: "switching times from the optimality conditions by shooting with RK4 (dt = 1e-4)".into(),
                    breakpoints: vec![t1, t2],
                    control: Arc::new(move |t| r.control(t)),
                    state: Some(Arc::new(move |t| r.state(t).to_vec())),
                }),
                reference_objective: Some(ReferenceObjective {
                    value: r.objective,
                    kind: ReferenceKind::Analytic,
                    provenance: "RK4 quadrature along the optimal arcs".into(),
                }),
                switch_times: vec![t1, t2],
                error_interval: (2.6, 4.0),
                ringing_interval: (t2, 4.0),
            })
        }
        "regulator" => {
            let r = RegulatorReference::compute();
            Ok(Benchmark {
                name: "regulator",
                description: "second-order singular regulator; bang then singular",
                problem: boxed_problem("regulator", 5.0, DoubleIntegrator { w1: 1.0, w2: 1.0 })?,
                control: boxed_control,
                reference: Some(ReferenceControl {
                    kind: ReferenceKind::Analytic,
                    provenance: "closed form on both arcs, junction time by bisection".into(),
                    breakpoints: vec![r.ts],
                    control: Arc::new(move |t| r.control(t)),
                    state: Some(Arc::new(move |t| r.state(t).to_vec())),
                }),
                reference_objective: Some(ReferenceObjective {
                    value: r.objective,
                    kind: ReferenceKind::Analytic,
                    provenance: "closed form".into(),
                }),
                switch_times: vec![r.ts],
                error_interval: (1.5, 5.0),
                ringing_interval: (1.5, 5.0),
            })
        }
        "alychan" => Ok(Benchmark {
            name: "alychan",
            description: "Aly-Chan problem; totally singular smooth control u = -sin t",
            problem: boxed_problem("alychan", FRAC_PI_2, DoubleIntegrator { w1: -1.0, w2: 1.0 })?,
            control: boxed_control,
            reference: Some(ReferenceControl {
                kind: ReferenceKind::Analytic,
                provenance: "closed form".into(),
                breakpoints: vec![],
                control: Arc::new(|t: f64| -t.sin()),
                state: Some(Arc::new(|t: f64| vec![t.sin(), t.cos()])),
            }),
            reference_objective: Some(ReferenceObjective { value: 0.0, kind: ReferenceKind::Analytic, provenance: "closed form".into() }),
            switch_times: vec![],
            error_interval: (0.0, FRAC_PI_2),
            ringing_interval: (0.0, FRAC_PI_2),
        }),
        "pendulum-a" | "pendulum-b" | "pendulum-c" => {
            let (case, idx, description) = match name {
                "pendulum-a" => (PendulumCase::A, 0, "pendulum brought to rest; index-1 beam force equation"),
                "pendulum-b" => (PendulumCase::B, 1, "pendulum brought to rest with beam force at most 8"),
                _ => (PendulumCase::C, 2, "pendulum brought to rest; index-3 length constraint"),
            };
            let value = PENDULUM_OBJECTIVES[idx];
            Ok(Benchmark {
                name: NAMES[3 + idx],
                description,
                problem: pendulum_problem(case)?,
                control: pendulum_control,
                reference: None,
                reference_objective: value.is_finite().then(|| ReferenceObjective {
                    value,
                    kind: ReferenceKind::Numerical,
                    provenance: if idx == 2 {
                        "same optimum as pendulum-a (index-1 form of the same problem)".into()
                    } else {
                        "self-converged solve, 400 elements, p = 5, omega = tau = 1e-12".into()
                    },
                }),
                switch_times: vec![],
                error_interval: (0.0, 3.0),
                ringing_interval: (0.0, 3.0),
            })
        }
        _ => Err(Error::UnknownProblem { name: name.to_string(), registered: NAMES.join(", ") }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry() {
        for n in NAMES {
            let b = build(n).unwrap();
            assert_eq!(b.name, n);
            assert_eq!(b.problem.name, n);
        }
        let e = build("nope").unwrap_err().to_string();
        assert!(e.contains("vanderpol") && e.contains("pendulum-c"), "{e}");
    }

    fn check_reference(b: &Benchmark) {
        let r = b.reference.as_ref().unwrap();
        let p = &b.problem;
        let mut starts = vec![];
        for &tk in &p.point_times {
            starts.extend(r.state(tk).unwrap());
        }
        assert!(p.evaluate_point_constraints(&starts).unwrap().iter().all(|v| v.abs() < 1e-12));
        let n = 57;
        for k in 0..n {
            let t = p.t0 + (p.t_end - p.t0) * (k as f64 + 0.5) / n as f64;
            if r.breakpoints.iter().any(|&s| (s - t).abs() < 1e-3) {
                continue;
            }
            let u = r.control(t);
            assert!(u.abs() <= 1.0 + 1e-12);
            let e = 1e-5;
            let (yp, ym) = (r.state(t + e).unwrap(), r.state(t - e).unwrap());
            let yd: Vec<f64> = yp.iter().zip(&ym).map(|(a, b)| (a - b) / (2.0 * e)).collect();
            let z = [1.0 + u, 1.0 - u];
            let c = p.evaluate_dae_residual(&yd, &r.state(t).unwrap(), &z, t).unwrap();
            assert!(c.iter().all(|v| v.abs() < 1e-8), "{} at {t}: {c:?}", b.name);
        }
    }

    #[test]
    fn references_satisfy_the_dae() {
        for n in ["vanderpol", "regulator", "alychan"] {
            check_reference(&build(n).unwrap());
        }
    }

    #[test]
    fn pendulum_rest_states_satisfy_boundary_conditions() {
        let p = pendulum_problem(PendulumCase::A).unwrap();
        let b = p.evaluate_point_constraints(&[1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]).unwrap();
        assert!(b.iter().all(|v| *v == 0.0));
        // hanging at rest: tension balances gravity with zero control
        let c = p.evaluate_dae_residual(&[0.0; 4], &[0.0, -1.0, 0.0, 0.0], &[GRAVITY / 2.0, 0.0], 0.0).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-14), "{c:?}");
    }

    #[test]
    fn sawtooth_midpoint_blindness() {
        use crate::problem::feasibility_residual_exact;
        use crate::quadrature::gauss_legendre;
        use crate::transcription::{PenaltyBarrierParams, TranscribedNlp};
        let problem = sawtooth_problem().unwrap();
        assert_eq!(problem.evaluate_dae_residual(&[], &[], &[0.5], 0.0).unwrap()[0], 1.0);
        let traj = sawtooth_trajectory(4).unwrap();
        let nlp = TranscribedNlp::fem(problem.clone(), traj.space(), &gauss_legendre(1), PenaltyBarrierParams::new(0.1, 0.1).unwrap()).unwrap();
        let c = nlp.constraints(&traj.coeffs).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-12), "{c:?}");
        let r = feasibility_residual_exact(&problem, &traj, 64).unwrap();
        assert!((r - 0.5).abs() < 1e-6, "{r}");
    }
}
