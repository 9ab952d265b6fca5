//! Aly-Chan problem, whose optimal control u = -sin t is singular on the
//! whole horizon. PBF and Radau collocation are compared against the
//! closed-form solution.
use pbf::benchmarks;
use pbf::collocation::ringing_score;
use pbf::run::{benchmark_control_error, solve_benchmark, Method};
use pbf::solver::SolverConfig;

fn main() -> pbf::Result<()> {
    env_logger::init();
    let b = benchmarks::build("alychan")?;
    let n: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(100);
    for method in [Method::Pbf, Method::Lgr] {
        let rep = solve_benchmark(&b, method, n, 5, &SolverConfig::default())?;
        let err = benchmark_control_error(&b, &rep.trajectory, b.error_interval)?.unwrap();
        let ring = ringing_score(&rep.trajectory, b.control, b.ringing_interval, 400)?;
        println!(
            "{method:>4}: {:?}  F_h = {:.3e}  r_feas = {:.2e}  error = {err:.3e}  ringing = {ring:.3}",
            rep.status, rep.objective, rep.r_feas
        );
    }
    Ok(())
}
