//! One-bit Bernstein approximation of a kink, first and second order.

use onebit_bernstein::prelude::*;

fn main() -> Result<()> {
    let f = FunctionSpec::from_registry("abs", &[0.9, 0.5])?;
    for order in [1usize, 2] {
        let cfg = if order == 1 {
            QuantizerConfig::greedy(1, Alphabet::PlusMinusOne)
        } else {
            QuantizerConfig::stable_one_bit(2, 0.9)
        };
        println!("order {order}");
        for n in [64usize, 256, 1024, 4096] {
            let y = sample_grid(&f, n)?;
            let res = quantize(&y.values, &cfg)?;
            let report = pointwise_error(&f, &res.to_poly()?, 2001)?;
            println!("  n = {n:5}  sup[0.2,0.8] = {:.4e}  max|u| = {:.3}", report.sup_on_interval, res.u_max);
        }
    }
    Ok(())
}
