//! Van der Pol oscillator with PBF on 100 elements of degree 5.
use pbf::analysis::{control_error, Norm};
use pbf::benchmarks;
use pbf::fem::FESpace;
use pbf::mesh::Mesh;
use pbf::solver::{solve_fem, SolverConfig};

fn main() -> pbf::Result<()> {
    env_logger::init();
    let b = benchmarks::build("vanderpol")?;
    let n: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(100);
    let space = FESpace::new(Mesh::uniform(0.0, 4.0, n)?, 5, 2, 2, false)?;
    let rep = solve_fem(&b.problem, &space, &SolverConfig::default())?;
    let r = b.reference.as_ref().unwrap();
    println!("status {:?}, iterations {}, {:.2}s", rep.status, rep.iterations(), rep.wall_time_s);
    println!("F_h = {:.10}, F* = {:.10}, r_feas = {:.3e}", rep.objective, b.reference_objective.as_ref().unwrap().value, rep.r_feas);
    for t0 in [0.0, b.switch_times[1], 2.5, 2.6] {
        let e = control_error(&rep.trajectory, b.control, |t| r.control(t), (t0, 4.0), Norm::L2, &r.breakpoints)?;
        println!("e({t0:.4}) = {e:.3e}");
    }
    for s in &rep.stages {
        println!("omega {:.0e}: {:?} after {} iterations, grad {:.2e}", s.omega, s.status, s.iterations, s.grad_inf);
    }
    Ok(())
}
