//! Checks ‖u‖∞ ≤ (p+1)/√|T| ‖u‖₂ on random polynomials and shows that the
//! extremal polynomial attains it.
use pbf::fem::{extremal_polynomial, norm_equivalence_bound_check};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> pbf::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for _ in 0..1000 {
        let p = rng.gen_range(0..=8);
        let coeffs: Vec<f64> = (0..=p).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let a = rng.gen_range(-5.0..5.0);
        let len = rng.gen_range(0.01..3.0);
        let chk = norm_equivalence_bound_check(&coeffs, (a, a + len), p)?;
        worst = worst.max(chk.sup_norm / chk.bound);
        violations += usize::from(!chk.bound_satisfied);
    }
    println!("1000 random polynomials: {violations} violations, largest sup/bound = {worst:.4}");
    for p in 0..=8 {
        let chk = norm_equivalence_bound_check(&extremal_polynomial(p), (-1.0, 1.0), p)?;
        let half_sq = 0.5 * chk.l2_norm.powi(2);
        println!("p = {p}: ½‖u‖² = {half_sq:.12}  1/(p+1)² = {:.12}  sup/bound = {:.12}", 1.0 / ((p + 1) * (p + 1)) as f64, chk.sup_norm / chk.bound);
    }
    Ok(())
}
