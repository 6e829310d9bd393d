//! Integer coefficients through Kantorovich averages, measured in L1 and L2.

use onebit_bernstein::prelude::*;

fn main() -> Result<()> {
    let f = FunctionSpec::from_registry("abs", &[1.0, 0.5])?;
    let mut ns = Vec::new();
    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    for n in [32usize, 64, 128, 256, 512, 1024] {
        let y = kantorovich_coeffs(&f, n)?;
        let res = quantize(&y.values, &QuantizerConfig::greedy(1, Alphabet::Integers))?;
        let report = pointwise_error(&f, &res.to_poly()?, 4001)?;
        let (a, b) = (report.norm(Norm::Lp(1.0)).unwrap(), report.norm(Norm::Lp(2.0)).unwrap());
        println!("n = {n:5}  L1 = {a:.4e}  L2 = {b:.4e}  nonzero q = {}", res.q.iter().filter(|q| **q != 0.0).count());
        ns.push(n);
        l1.push(a);
        l2.push(b);
    }
    println!("slopes: L1 {:.3}  L2 {:.3}", rate_fit(&ns, &l1)?.slope, rate_fit(&ns, &l2)?.slope);
    Ok(())
}
