//! Singular regulator: PBF against Radau collocation on the same mesh.
//!
//! Prints the control error on [1.5, 5] and the ringing score of each method.
use pbf::benchmarks;
use pbf::collocation::{ringing_score, RINGING_THRESHOLD};
use pbf::run::{benchmark_control_error, solve_benchmark, Method};
use pbf::solver::SolverConfig;

fn main() -> pbf::Result<()> {
    env_logger::init();
    let b = benchmarks::build("regulator")?;
    let n: usize = std::env::args().nth(1).map(|s| s.parse().unwrap()).unwrap_or(100);
    let cfg = SolverConfig::default();
    for method in [Method::Pbf, Method::Lgr] {
        let rep = solve_benchmark(&b, method, n, 5, &cfg)?;
        let err = benchmark_control_error(&b, &rep.trajectory, b.error_interval)?.unwrap();
        let ring = ringing_score(&rep.trajectory, b.control, b.ringing_interval, 400)?;
        println!(
            "{method:>4}: {:?}  F_h = {:.8}  r_feas = {:.2e}  error = {err:.3e}  ringing = {ring:.3}{}",
            rep.status,
            rep.objective,
            rep.r_feas,
            if ring > RINGING_THRESHOLD { "  (ringing)" } else { "" }
        );
    }
    Ok(())
}
