//! The iterated operator I - (I - B_n)^r before and after one-bit quantization.

use onebit_bernstein::prelude::*;

fn sup_interior(f: &FunctionSpec, p: &BernsteinPoly) -> Result<f64> {
    Ok(pointwise_error(f, p, 1001)?.sup_on_interval)
}

fn main() -> Result<()> {
    let f = FunctionSpec::from_registry("sin", &[0.8, 1.0])?;
    for r in [2usize, 3] {
        let pr = pr_coeffs(r)?;
        println!("r = {r}  P coefficients {:?}  C_r = {}", pr.coeffs, pr.c_r);
        for n in [32usize, 128, 512] {
            let g = iterated_u_coeffs(&f, n, r)?;
            let gate = check_onebit_admissible(&g, 0.9);
            let plain = sup_interior(&f, &g.to_bernstein())?;
            let quantized = if gate.admissible {
                let res = quantize(&g.values, &QuantizerConfig::stable_one_bit(4, 0.9))?;
                format!("{:.4e}", sup_interior(&f, &res.to_poly()?)?)
            } else {
                "not admissible".to_string()
            };
            println!("  n = {n:4}  max|f_n,r| = {:.4}  U error = {plain:.4e}  one-bit error = {quantized}", gate.max_abs);
        }
    }
    Ok(())
}
