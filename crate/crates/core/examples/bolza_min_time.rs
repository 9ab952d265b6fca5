//! Minimum-time double integrator written in Bolza form, converted and solved.
//! The exact answer is τE = 2 with u = +1 on the first half and -1 after.
//! The conversion does not order τ0 and τE by itself, so τ0 - τE ≤ 0 is
//! stated as a path inequality; without it the time can run backwards and
//! the cost is unbounded below. The control is bounded by the inequalities
//! and kept unsplit: splitting it into two barrier-protected parts would let
//! both parts grow without limit.
use pbf::bolza::{convert_bolza, BolzaDims, BolzaModel, BolzaProblem, EndTime, InputKind};
use pbf::fem::FESpace;
use pbf::mesh::Mesh;
use pbf::scalar::Scalar;
use pbf::solver::{solve_fem, SolverConfig};

struct MinTime;

impl BolzaModel for MinTime {
    fn terminal<S: Scalar>(&self, _chi: &[S], tau_end: S) -> S {
        tau_end
    }
    fn equalities<S: Scalar>(&self, cd: &[S], chi: &[S], u: &[S], _xi: &[S], _tau: S, out: &mut [S]) {
        out[0] = cd[0] - chi[1];
        out[1] = cd[1] - u[0];
    }
    fn inequalities<S: Scalar>(&self, _cd: &[S], _chi: &[S], u: &[S], _xi: &[S], t0: S, te: S, _tau: S, out: &mut [S]) {
        out[0] = u[0] - 1.0;
        out[1] = -u[0] - 1.0;
        out[2] = t0 - te;
    }
    fn boundary<S: Scalar>(&self, c0: &[S], ce: &[S], _t0: S, _te: S, out: &mut [S]) {
        out[0] = c0[0];
        out[1] = c0[1];
        out[2] = ce[0] - 1.0;
        out[3] = ce[1];
    }
}

fn main() -> pbf::Result<()> {
    env_logger::init();
    let dims = BolzaDims { n_chi: 2, n_u: 1, n_xi: 0, n_e: 2, n_i: 3, n_bb: 4 };
    let mut bolza = BolzaProblem::new("min-time", dims, MinTime, (0.0, 3.0));
    bolza.tau_end = EndTime::Free(3.0);
    bolza.inputs = vec![InputKind::Unrestricted];
    let (problem, layout) = convert_bolza(bolza)?;
    let n: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(20);
    let space = FESpace::new(Mesh::uniform(problem.t0, problem.t_end, n)?, 4, problem.n_y, problem.n_z, false)?;
    let rep = solve_fem(&problem, &space, &SolverConfig::default())?;
    let end = rep.trajectory.evaluate(1.0, 0)?;
    println!("{:?} after {} iterations", rep.status, rep.iterations());
    println!("tau_end = {:.6}  objective = {:.6}  r_feas = {:.2e}", end[layout.tau_end], rep.objective, rep.r_feas);
    for s in &rep.stages {
        println!("  omega {:.0e}: {:?} after {} iterations", s.omega, s.status, s.iterations);
    }
    for t in [0.1, 0.3, 0.7, 0.9] {
        let v = rep.trajectory.evaluate(t, 0)?;
        let z = &v[problem.n_y..];
        println!("  u({t}) = {:+.4}", z[layout.input]);
    }
    Ok(())
}
