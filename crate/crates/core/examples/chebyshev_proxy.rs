//! Near-best polynomial proxies converted to the Bernstein basis.

use onebit_bernstein::prelude::*;

fn main() -> Result<()> {
    let smooth = FunctionSpec::from_registry("exp", &[1.0])?;
    for n in [4usize, 8, 16] {
        let p = near_best_proxy(&smooth, n, Norm::Sup)?;
        let err = lp_norm_of(|x| p.poly.eval(x).unwrap() - smooth.eval(x), Norm::Sup, 2001)?;
        println!(
            "exp  n = {n:2}  sup error = {err:.3e}  estimate = {:.3e}  effective degree = {}  condition = {:.1}",
            p.error_estimate.unwrap_or(f64::NAN),
            p.effective_degree,
            p.condition
        );
    }
    let kink = FunctionSpec::from_registry("abs", &[1.0, 0.5])?;
    for n in [4usize, 8, 16, 32] {
        let p = near_best_proxy(&kink, n, Norm::Lp(2.0))?;
        let err = lp_norm_of(|x| p.poly.eval(x).unwrap() - kink.eval(x), Norm::Lp(2.0), 2001)?;
        println!("abs  n = {n:2}  L2 error = {err:.3e}");
    }

    // quantizing the proxy with integers at order 4
    let p = near_best_proxy(&smooth, 64, Norm::Sup)?;
    let res = quantize(p.poly.coeffs(), &QuantizerConfig::greedy(4, Alphabet::Integers))?;
    let report = pointwise_error(&smooth, &res.to_poly()?, 2001)?;
    println!("integer quantized proxy at n = 64: sup[0.2,0.8] = {:.3e}", report.sup_on_interval);
    Ok(())
}
