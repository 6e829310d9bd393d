//! Rounding Bernstein coefficients onto the lattices D_{n,k} Z.

use onebit_bernstein::lattice::LatticeParams;
use onebit_bernstein::prelude::*;

fn main() -> Result<()> {
    let f = FunctionSpec::from_registry("bump", &[])?;
    for alpha in [0.0, 0.5, 1.0] {
        println!("alpha = {alpha}");
        for n in [16usize, 64, 256] {
            let lr = round_alpha(&f, n, alpha)?;
            let e = lr.sup_error(2001)?;
            println!("  n = {n:4}  sup error = {e:.4e}  n^(alpha-1) = {:.4e}", (n as f64).powf(alpha - 1.0));
        }
    }
    let p = LatticeParams::new(8, 0.5)?;
    let d: Vec<String> = p.delta.iter().map(|d| d.to_string()).collect();
    println!("D_8 at alpha 1/2: {}", d.join(" "));
    for n in [10usize, 100, 1000] {
        let s = lattice_stats(n)?;
        println!("n = {n:4}  log2 M = {:.1}  bits per coefficient = {:.3}", s.log2_m, s.mu);
    }
    println!("integer coefficients at n = 6: {:?}", round_star(&f, 6)?.iter().map(|c| c.to_string()).collect::<Vec<_>>());
    Ok(())
}
