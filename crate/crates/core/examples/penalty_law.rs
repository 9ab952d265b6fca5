//! Feasibility residual against the penalty parameter on a fixed mesh.
//!
//!     cargo run --release --example penalty_law -- pendulum-a 40
use pbf::analysis::estimate_order;
use pbf::benchmarks;
use pbf::run::{solve_benchmark, Method};
use pbf::solver::SolverConfig;

fn main() -> pbf::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "pendulum-a".into());
    let n: usize = args.next().map(|s| s.parse().unwrap()).unwrap_or(40);
    let b = benchmarks::build(&name)?;
    let mut series = Vec::new();
    for k in 3..=7 {
        let omega = 10f64.powi(-k);
        let cfg = SolverConfig { omega_target: omega, tau_target: omega, ..SolverConfig::default() };
        let rep = solve_benchmark(&b, Method::Pbf, n, 5, &cfg)?;
        println!("omega = {omega:.0e}  r_feas = {:.4e}  F_h = {:.10}  {:?}", rep.r_feas, rep.objective, rep.status);
        series.push((omega, rep.r_feas));
    }
    println!("log-log slope of r_feas in omega: {:.3}", estimate_order(&series)?);
    Ok(())
}
