//! A quadrature rule that is too coarse can make an infeasible point look
//! feasible. The sawtooth x(t) maps every element midpoint to an integer, so
//! with c(x) = sin(πx) the midpoint rule assembles a zero residual while the
//! true residual is 1/2. More Gauss points per element expose it.
use pbf::benchmarks::{sawtooth_problem, sawtooth_trajectory};
use pbf::problem::feasibility_residual_exact;
use pbf::quadrature::gauss_legendre;
use pbf::transcription::{PenaltyBarrierParams, TranscribedNlp};

fn main() -> pbf::Result<()> {
    let problem = sawtooth_problem()?;
    let params = PenaltyBarrierParams::new(0.1, 0.1)?;
    for n in [4, 8, 16] {
        let traj = sawtooth_trajectory(n)?;
        let exact = feasibility_residual_exact(&problem, &traj, 16 * n)?;
        print!("h = 1/{n:<3} exact r = {exact:.8}   assembled r_h:");
        for q in [1, 2, 3, 5] {
            let nlp = TranscribedNlp::fem(problem.clone(), traj.space(), &gauss_legendre(q), params)?;
            let r_h: f64 = nlp.constraints(&traj.coeffs)?.iter().map(|c| c * c).sum();
            print!("  {q} pt {r_h:.2e}");
        }
        println!();
    }
    Ok(())
}
