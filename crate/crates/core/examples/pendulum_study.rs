//! Mesh refinement on the pendulum: feasibility residual of PBF and of the
//! trapezoidal rule for the index-1 (a) or index-3 (c) formulation.
//!
//!     cargo run --release --example pendulum_study -- pendulum-c 20,40,80
use pbf::analysis::estimate_order;
use pbf::benchmarks;
use pbf::run::{solve_benchmark, Method};
use pbf::solver::SolverConfig;

fn main() -> pbf::Result<()> {
    env_logger::init();
    let mut args = std::env::args().skip(1);
    let name = args.next().unwrap_or_else(|| "pendulum-a".into());
    let counts: Vec<usize> = args
        .next()
        .map(|s| s.split(',').map(|v| v.parse().unwrap()).collect())
        .unwrap_or_else(|| vec![10, 20, 40, 80]);
    let b = benchmarks::build(&name)?;
    let horizon = b.problem.t_end - b.problem.t0;
    for method in [Method::Pbf, Method::Tr] {
        let mut series = Vec::new();
        println!("{method}");
        for &n in &counts {
            let rep = solve_benchmark(&b, method, n, 5, &SolverConfig::default())?;
            println!("  n = {n:4}  F_h = {:.8}  r_feas = {:.3e}  {:?}", rep.objective, rep.r_feas, rep.status);
            series.push((horizon / n as f64, rep.r_feas));
        }
        if series.len() > 1 && series.iter().all(|&(_, r)| r > 0.0) {
            println!("  fitted order of r_feas: {:.2}", estimate_order(&series)?);
        }
    }
    Ok(())
}
