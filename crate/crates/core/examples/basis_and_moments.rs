//! Basis values, central moments and difference variations at a few degrees.

use onebit_bernstein::prelude::*;

fn main() -> Result<()> {
    let x = 0.3;
    for n in [16usize, 256, 4096] {
        let p = basis_values(n, x)?;
        let total: f64 = p.iter().sum();
        println!(
            "n = {n:5}  sum p = {total:.15}  T1 = {:+.2e}  T2 / (n x(1-x)) = {:.12}",
            moment(n, x, 1)?,
            moment(n, x, 2)? / (n as f64 * x * (1.0 - x))
        );
        for r in 1..=3 {
            // V_{n,r} decays like n^(-r/2) in the interior
            let v = variation(n, x, r)?;
            println!("    r = {r}  V = {v:.6e}  V * n^(r/2) = {:.4}", v * (n as f64).powf(r as f64 / 2.0));
        }
    }
    Ok(())
}
