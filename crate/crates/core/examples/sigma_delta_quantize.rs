//! Greedy and stable noise shaping of a fixed sequence.

use onebit_bernstein::prelude::*;
use onebit_bernstein::sigma_delta::verify_difference_equation;

fn main() -> Result<()> {
    let n = 1000;
    let y: Vec<f64> = (0..=n).map(|k| 0.7 * (6.0 * k as f64 / n as f64).sin()).collect();

    let configs = [
        QuantizerConfig::greedy(1, Alphabet::PlusMinusOne),
        QuantizerConfig::greedy(2, Alphabet::PlusMinusOne),
        QuantizerConfig::greedy(3, Alphabet::Integers),
        QuantizerConfig::stable_one_bit(3, 0.8),
    ];
    for cfg in &configs {
        let res = quantize(&y, cfg)?;
        println!(
            "order {} {:>4} {:>6}: max|u| = {:10.4}  residual = {:.1e}",
            cfg.order,
            res.alphabet.to_string(),
            res.rule,
            res.u_max,
            verify_difference_equation(&y, &res)?
        );
    }

    // third-order greedy signs are not stable
    let unstable = QuantizerConfig::greedy(3, Alphabet::PlusMinusOne).with_u_cap(1e3);
    match quantize(&y, &unstable) {
        Err(e) => println!("greedy order 3 pm1: {e}"),
        Ok(res) => println!("greedy order 3 pm1: max|u| = {}", res.u_max),
    }
    Ok(())
}
