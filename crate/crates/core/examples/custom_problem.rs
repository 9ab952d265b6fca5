//! Defining a new problem: steer ẏ = -y + u from y(0) = 1 to y(2) = 0 with
//! minimal ∫ u², u free. Solved with PBF and with Hermite-Simpson.
//! The minimizer is u(t) = -2 e^t / (e^4 - 1) with cost 2 / (e^4 - 1).
use pbf::collocation::{solve_collocation, CollocationScheme};
use pbf::fem::FESpace;
use pbf::mesh::Mesh;
use pbf::problem::{AlgebraicKind, DaeModel, Dims, DynamicProblem};
use pbf::scalar::Scalar;
use pbf::solver::{solve_fem, SolverConfig};

struct Steer;

impl DaeModel for Steer {
    fn objective<S: Scalar>(&self, _yd: &[S], _y: &[S], z: &[S], _t: f64) -> S {
        z[0].square()
    }
    fn residual<S: Scalar>(&self, yd: &[S], y: &[S], z: &[S], _t: f64, out: &mut [S]) {
        out[0] = yd[0] + y[0] - z[0];
    }
    fn point_constraints<S: Scalar>(&self, yp: &[S], out: &mut [S]) {
        out[0] = yp[0] - 1.0;
        out[1] = yp[1];
    }
}

fn main() -> pbf::Result<()> {
    env_logger::init();
    let problem = DynamicProblem::new("steer", Dims { n_y: 1, n_z: 1, n_c: 1, n_b: 2 }, (0.0, 2.0), vec![0.0, 2.0], Steer)?
        .with_z_kinds(vec![AlgebraicKind::Free])?;
    let exact = 2.0 / (4.0f64.exp() - 1.0);
    let cfg = SolverConfig::default();
    let mesh = Mesh::uniform(0.0, 2.0, 10)?;
    let pbf = solve_fem(&problem, &FESpace::new(mesh.clone(), 3, 1, 1, false)?, &cfg)?;
    let hs = solve_collocation(&problem, &mesh, CollocationScheme::hermite_simpson(), &cfg)?.report;
    println!("exact cost {exact:.10}");
    println!("pbf  {:.10}  r_feas {:.2e}  {:?}", pbf.objective, pbf.r_feas, pbf.status);
    println!("hs   {:.10}  r_feas {:.2e}  {:?}", hs.objective, hs.r_feas, hs.status);
    Ok(())
}
