//! L¹ error of the piecewise constant projection for two nonsmooth targets:
//! a nested step function and a Weierstrass function.
use pbf::analysis::{estimate_order, nested_step_limit, projection_errors, weierstrass, weierstrass_terms};

fn main() -> pbf::Result<()> {
    let ks = [4, 5, 6, 7, 8];
    let step = projection_errors(nested_step_limit, &ks, 0, 4)?;
    for (h, e) in &step {
        println!("nested step  h = {h:.5}  error = {e:.4e}");
    }
    println!("nested step order {:.3}", estimate_order(&step)?);
    let a = 0.375;
    let terms = weierstrass_terms(a);
    let w = projection_errors(|t| weierstrass(t, a, terms), &ks, 0, 64)?;
    for (h, e) in &w {
        println!("weierstrass  h = {h:.5}  error = {e:.4e}");
    }
    println!("weierstrass a = {a} order {:.3}", estimate_order(&w)?);
    Ok(())
}
