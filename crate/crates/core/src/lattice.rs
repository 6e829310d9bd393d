//! Coefficient-wise rounding of Bernstein polynomials to integer lattices.
//!
//! For `alpha` in `[0, 1]` the lattice spacing in front of `x^k (1-x)^(n-k)`
//! is `D_{n,k} = floor(C(n,k)^alpha)`; `alpha = 0` gives plain integer
//! coefficients and `alpha = 1` gives integer multiples of the basis itself.
//! All lattice data is exact.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::bernstein::{basis_values, BernsteinPoly};
use crate::binomial::{choose_row_exact, ln_choose};
use crate::error::{Error, Result};
use crate::functions::FunctionSpec;

/// Largest degree for exact lattice rounding.
pub const LATTICE_MAX_DEGREE: usize = 1000;

/// Largest denominator accepted for the exponent `alpha`.
pub const ALPHA_MAX_DENOMINATOR: u64 = 64;

/// Nearest integer, ties to even.
pub fn round_half_even(r: &BigRational) -> BigInt {
    let fl = r.floor();
    let frac = r - &fl;
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let base = fl.to_integer();
    match frac.cmp(&half) {
        std::cmp::Ordering::Less => base,
        std::cmp::Ordering::Greater => base + 1,
        std::cmp::Ordering::Equal => {
            if base.is_even() {
                base
            } else {
                base + 1
            }
        }
    }
}

/// `alpha` as `p/q` with `q <= 64`, if such a fraction lies within 1e-12.
pub fn alpha_as_fraction(alpha: f64) -> Result<(u64, u64)> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    // continued-fraction convergents
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut x = alpha;
    for _ in 0..64 {
        let a = x.floor();
        let (p2, q2) = (a as u64 * p1 + p0, a as u64 * q1 + q0);
        if q2 > ALPHA_MAX_DENOMINATOR {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        if (alpha - p1 as f64 / q1 as f64).abs() <= 1e-12 {
            return Ok((p1, q1));
        }
        let frac = x - a;
        if frac == 0.0 {
            break;
        }
        x = 1.0 / frac;
    }
    Err(Error::InvalidParameter(format!(
        "alpha = {alpha} is not a fraction with denominator <= {ALPHA_MAX_DENOMINATOR}"
    )))
}

fn check_degree(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    if n > LATTICE_MAX_DEGREE {
        return Err(Error::DegreeTooLarge { n, cap: LATTICE_MAX_DEGREE, what: "exact lattice rounding" });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LatticeParams {
    pub n: usize,
    pub alpha: f64,
    /// `floor(C(n,k)^alpha)`, `k = 0..=n`.
    #[serde(serialize_with = "ser_biguints")]
    pub delta: Vec<BigUint>,
}

fn ser_biguints<S: serde::Serializer>(v: &[BigUint], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|b| b.to_string()))
}

fn ser_bigints<S: serde::Serializer>(v: &[BigInt], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|b| b.to_string()))
}

impl LatticeParams {
    pub fn new(n: usize, alpha: f64) -> Result<Self> {
        check_degree(n)?;
        let (p, q) = alpha_as_fraction(alpha)?;
        let delta = choose_row_exact(n as u64)
            .into_iter()
            .map(|c| if p == 0 { BigUint::one() } else { c.pow(p as u32).nth_root(q as u32) })
            .collect();
        Ok(Self { n, alpha, delta })
    }
}

/// Lattice point nearest (coefficient-wise) to the Bernstein polynomial of `f`.
#[derive(Clone, Debug, Serialize)]
pub struct LatticeRounding {
    pub params: LatticeParams,
    /// `m_k = [f(k/n) C(n,k) / D_{n,k}]`.
    #[serde(serialize_with = "ser_bigints")]
    pub multiples: Vec<BigInt>,
    /// Integer coefficients `m_k D_{n,k}` of `x^k (1-x)^(n-k)`.
    #[serde(serialize_with = "ser_bigints")]
    pub coefficients: Vec<BigInt>,
    /// `f(k/n) - m_k D_{n,k} / C(n,k)`, rounded to f64 from the exact value.
    pub error_coeffs: Vec<f64>,
    #[serde(skip)]
    binomials: Vec<BigUint>,
}

impl LatticeRounding {
    /// Bernstein-form coefficients `m_k D_{n,k} / C(n,k)`.
    pub fn to_bernstein(&self) -> BernsteinPoly {
        let c = self
            .coefficients
            .iter()
            .zip(&self.binomials)
            .map(|(a, b)| BigRational::new(a.clone(), BigInt::from(b.clone())).to_f64().unwrap_or(f64::NAN))
            .collect();
        BernsteinPoly::new(c).expect("degree >= 1")
    }

    /// `max |sum_k d_k p_{n,k}(x)|` over a uniform grid of `grid_size` points.
    pub fn sup_error(&self, grid_size: usize) -> Result<f64> {
        if grid_size < 2 {
            return Err(Error::InvalidParameter("grid size must be at least 2".into()));
        }
        let n = self.params.n;
        let mut worst: f64 = 0.0;
        for i in 0..grid_size {
            let x = i as f64 / (grid_size - 1) as f64;
            let p = basis_values(n, x)?;
            let e: f64 = p.iter().zip(&self.error_coeffs).map(|(a, b)| a * b).sum();
            worst = worst.max(e.abs());
        }
        Ok(worst)
    }
}

/// Integer coefficients `[f(k/n) C(n,k)]` of `x^k (1-x)^(n-k)`.
pub fn round_star(f: &FunctionSpec, n: usize) -> Result<Vec<BigInt>> {
    Ok(round_alpha(f, n, 0.0)?.coefficients)
}

pub fn round_alpha(f: &FunctionSpec, n: usize, alpha: f64) -> Result<LatticeRounding> {
    let params = LatticeParams::new(n, alpha)?;
    let binomials = choose_row_exact(n as u64);
    let mut multiples = Vec::with_capacity(n + 1);
    let mut coefficients = Vec::with_capacity(n + 1);
    let mut error_coeffs = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let v = f.eval(k as f64 / n as f64);
        let fv = BigRational::from_float(v)
            .ok_or_else(|| Error::InvalidParameter(format!("f({}/{n}) is not finite", k)))?;
        let c = BigInt::from(binomials[k].clone());
        let d = BigInt::from(params.delta[k].clone());
        let m = round_half_even(&(&fv * BigRational::new(c.clone(), d.clone())));
        let coeff = &m * &d;
        let err = fv - BigRational::new(coeff.clone(), c);
        error_coeffs.push(err.to_f64().unwrap_or(f64::NAN));
        multiples.push(m);
        coefficients.push(coeff);
    }
    debug_assert!(error_coeffs.iter().all(|e| e.is_finite()));
    Ok(LatticeRounding { params, multiples, coefficients, error_coeffs, binomials })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LatticeStats {
    pub n: usize,
    /// `sum_k log2 C(n,k)`.
    pub log2_m: f64,
    /// `log2_m / (n + 1)`.
    pub mu: f64,
}

pub fn lattice_stats(n: usize) -> Result<LatticeStats> {
    if n == 0 {
        return Err(Error::InvalidParameter("degree must be at least 1".into()));
    }
    let log2_m: f64 = (0..=n as u64).map(|k| ln_choose(n as u64, k)).sum::<f64>() / std::f64::consts::LN_2;
    Ok(LatticeStats { n, log2_m, mu: log2_m / (n + 1) as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn half_even() {
        assert_eq!(round_half_even(&r(1, 2)), BigInt::from(0));
        assert_eq!(round_half_even(&r(3, 2)), BigInt::from(2));
        assert_eq!(round_half_even(&r(-5, 2)), BigInt::from(-2));
        assert_eq!(round_half_even(&r(-7, 3)), BigInt::from(-2));
        assert_eq!(round_half_even(&r(5, 3)), BigInt::from(2));
    }

    #[test]
    fn fractions() {
        assert_eq!(alpha_as_fraction(0.5).unwrap(), (1, 2));
        assert_eq!(alpha_as_fraction(0.0).unwrap(), (0, 1));
        assert_eq!(alpha_as_fraction(1.0).unwrap(), (1, 1));
        assert_eq!(alpha_as_fraction(1.0 / 3.0).unwrap(), (1, 3));
        assert!(alpha_as_fraction(0.123456789).is_err());
        assert!(alpha_as_fraction(1.5).is_err());
    }

    #[test]
    fn delta_row() {
        let p = LatticeParams::new(4, 0.5).unwrap();
        let want: Vec<BigUint> = [1u32, 2, 2, 2, 1].iter().map(|v| BigUint::from(*v)).collect();
        assert_eq!(p.delta, want);
    }

    #[test]
    fn square_rounds_to_itself() {
        let f = FunctionSpec::from_registry("poly", &[0.0, 0.0, 1.0]).unwrap();
        let c = round_star(&f, 2).unwrap();
        assert_eq!(c, vec![BigInt::from(0), BigInt::from(0), BigInt::from(1)]);
    }

    #[test]
    fn stats_small() {
        let s = lattice_stats(2).unwrap();
        assert!((s.log2_m - 1.0).abs() < 1e-14);
        assert!((s.mu - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(lattice_stats(1).unwrap().mu, 0.0);
    }

    #[test]
    fn degree_cap() {
        let f = FunctionSpec::from_registry("bump", &[1.0]).unwrap();
        assert!(matches!(round_star(&f, 1001), Err(Error::DegreeTooLarge { .. })));
    }
}
