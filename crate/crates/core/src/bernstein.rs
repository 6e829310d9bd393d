//! Bernstein basis, polynomials in Bernstein form, adjoint differences of
//! the basis and the associated central moments.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::binomial::{binomial_pmf, choose_exact};
use crate::error::{check_unit, Error, Result};

/// Largest degree converted from the power basis in exact rational arithmetic.
pub const EXACT_CONVERSION_MAX_DEGREE: usize = 20;

/// Value of `p_{n,k}(x) = C(n,k) x^k (1-x)^(n-k)`; zero for `k > n`.
pub fn basis_value(n: usize, k: usize, x: f64) -> Result<f64> {
    check_unit(x)?;
    Ok(binomial_pmf(n as u64, k as u64, x))
}

/// All basis values `p_{n,0..=n}(x)`.
pub fn basis_values(n: usize, x: f64) -> Result<Vec<f64>> {
    check_unit(x)?;
    Ok((0..=n).map(|k| binomial_pmf(n as u64, k as u64, x)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EvalBackend {
    /// Sum of per-term basis values in log-space. O(n).
    #[default]
    LogSpace,
    /// de Casteljau's algorithm. O(n^2), used as a reference.
    DeCasteljau,
}

/// Polynomial `sum_k c_k p_{n,k}` with `n = coeffs.len() - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinPoly {
    coeffs: Vec<f64>,
}

impl BernsteinPoly {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidParameter("a Bernstein polynomial needs at least one coefficient".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self { coeffs: vec![c; n + 1] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.eval_with(x, EvalBackend::LogSpace)
    }

    pub fn eval_with(&self, x: f64, backend: EvalBackend) -> Result<f64> {
        check_unit(x)?;
        let n = self.degree() as u64;
        Ok(match backend {
            EvalBackend::LogSpace => self
                .coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(k, c)| c * binomial_pmf(n, k as u64, x))
                .sum(),
            EvalBackend::DeCasteljau => de_casteljau(&self.coeffs, x),
        })
    }

    pub fn eval_de_casteljau(&self, x: f64) -> Result<f64> {
        self.eval_with(x, EvalBackend::DeCasteljau)
    }

    /// Coefficient-wise difference `self - other`; degrees must agree.
    pub fn sub(&self, other: &BernsteinPoly) -> Result<BernsteinPoly> {
        if self.coeffs.len() != other.coeffs.len() {
            return Err(Error::LengthMismatch { expected: self.coeffs.len(), got: other.coeffs.len() });
        }
        Ok(BernsteinPoly { coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a - b).collect() })
    }

    /// Same polynomial written in degree `n + 1`.
    pub fn elevate(&self) -> BernsteinPoly {
        let n = self.degree();
        let m = (n + 1) as f64;
        let mut out = Vec::with_capacity(n + 2);
        out.push(self.coeffs[0]);
        for k in 1..=n {
            let t = k as f64 / m;
            out.push(t * self.coeffs[k - 1] + (1.0 - t) * self.coeffs[k]);
        }
        out.push(self.coeffs[n]);
        BernsteinPoly { coeffs: out }
    }
}

fn de_casteljau(coeffs: &[f64], x: f64) -> f64 {
    let mut b = coeffs.to_vec();
    let q = 1.0 - x;
    for j in 1..b.len() {
        for i in 0..b.len() - j {
            b[i] = q * b[i] + x * b[i + 1];
        }
    }
    b[0]
}

/// `r`-fold adjoint difference of the basis at a point, indexed `k = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffSequence {
    pub order: usize,
    pub values: Vec<f64>,
}

impl DiffSequence {
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }
}

fn adjoint_differences(mut u: Vec<f64>, r: usize) -> Vec<f64> {
    for _ in 0..r {
        for k in 0..u.len() - 1 {
            u[k] -= u[k + 1];
        }
        u.pop();
    }
    u
}

/// `(~D^r p_{n,.}(x))_k` for `k = 0..=n`, where `(~D u)_k = u_k - u_{k+1}`
/// and `p_{n,k} = 0` beyond `k = n`.
pub fn basis_diff(n: usize, x: f64, r: usize) -> Result<DiffSequence> {
    let mut u = basis_values(n, x)?;
    u.resize(n + 1 + r, 0.0);
    Ok(DiffSequence { order: r, values: adjoint_differences(u, r) })
}

/// Total variation `sum_k |(~D^r p_{n,.}(x))_k|`.
pub fn variation(n: usize, x: f64, r: usize) -> Result<f64> {
    Ok(basis_diff(n, x, r)?.l1_norm())
}

/// Central moment `sum_k (k - n x)^s p_{n,k}(x)`.
pub fn moment(n: usize, x: f64, s: u32) -> Result<f64> {
    let p = basis_values(n, x)?;
    let nx = n as f64 * x;
    Ok(p.iter().enumerate().map(|(k, pk)| (k as f64 - nx).powi(s as i32) * pk).sum())
}

/// Weighted absolute moment `sum_k |k - n x|^s |(~D^r p_{n,.}(x))_k|`.
pub fn abs_moment(n: usize, x: f64, r: usize, s: u32) -> Result<f64> {
    let d = basis_diff(n, x, r)?;
    let nx = n as f64 * x;
    Ok(d.values.iter().enumerate().map(|(k, v)| (k as f64 - nx).abs().powi(s as i32) * v.abs()).sum())
}

/// Result of a power-to-Bernstein conversion.
#[derive(Clone, Debug)]
pub struct BernsteinConversion {
    pub poly: BernsteinPoly,
    /// Whether the coefficients were formed in exact rational arithmetic.
    pub exact: bool,
    /// Ratio of the largest absolute partial sum to the largest coefficient.
    /// Values far above 1 mean the coefficients are dominated by cancellation.
    pub condition: f64,
}

// w[j] = C(k, j) / C(n, j) for j = 0..=min(k, m)
fn ratio_row(n: usize, k: usize, m: usize) -> Vec<f64> {
    let top = k.min(m);
    let mut w = Vec::with_capacity(top + 1);
    let mut r = 1.0;
    w.push(r);
    for j in 0..top {
        r *= (k - j) as f64 / (n - j) as f64;
        w.push(r);
    }
    w
}

fn condition_of(a: &[f64], n: usize, coeffs: &[f64]) -> f64 {
    let m = a.len() - 1;
    let mut worst: f64 = 0.0;
    for k in 0..=n {
        let w = ratio_row(n, k, m);
        let s: f64 = w.iter().zip(a).map(|(w, a)| (w * a).abs()).sum();
        worst = worst.max(s);
    }
    let big = coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    if worst == 0.0 {
        1.0
    } else if big == 0.0 {
        f64::INFINITY
    } else {
        worst / big
    }
}

/// Degree-`n` Bernstein coefficients of `sum_j a_j x^j`.
///
/// Exact rational arithmetic up to degree 20, floating point above with a
/// warning when `n > 64`.
pub fn power_to_bernstein(a: &[f64], n: usize) -> Result<BernsteinConversion> {
    if a.is_empty() {
        return Err(Error::InvalidParameter("empty power-basis coefficient list".into()));
    }
    let m = a.len() - 1;
    if n < m {
        return Err(Error::DegreeBelowPolynomial { requested: n, degree: m });
    }
    if n <= EXACT_CONVERSION_MAX_DEGREE {
        let exact: Option<Vec<BigRational>> = a.iter().map(|v| BigRational::from_float(*v)).collect();
        let exact = exact.ok_or_else(|| Error::InvalidParameter("non-finite power-basis coefficient".into()))?;
        return power_to_bernstein_exact(&exact, n);
    }
    if n > 64 {
        log::warn!("floating power-to-Bernstein conversion at degree {n} may be ill-conditioned");
    }
    let coeffs: Vec<f64> = (0..=n)
        .map(|k| ratio_row(n, k, m).iter().zip(a).map(|(w, a)| w * a).sum())
        .collect();
    let condition = condition_of(a, n, &coeffs);
    Ok(BernsteinConversion { poly: BernsteinPoly { coeffs }, exact: false, condition })
}

/// Exact conversion from rational power-basis coefficients; the result is
/// rounded to f64 only at the end.
pub fn power_to_bernstein_exact(a: &[BigRational], n: usize) -> Result<BernsteinConversion> {
    if a.is_empty() {
        return Err(Error::InvalidParameter("empty power-basis coefficient list".into()));
    }
    let m = a.len() - 1;
    if n < m {
        return Err(Error::DegreeBelowPolynomial { requested: n, degree: m });
    }
    let n_row: Vec<BigRational> =
        (0..=m).map(|j| BigRational::from_integer(choose_exact(n as u64, j as u64).into())).collect();
    let mut coeffs = Vec::with_capacity(n + 1);
    let mut worst: f64 = 0.0;
    for k in 0..=n {
        let mut s = BigRational::zero();
        let mut abs_s = BigRational::zero();
        for j in 0..=k.min(m) {
            if a[j].is_zero() {
                continue;
            }
            let ck = BigRational::from_integer(choose_exact(k as u64, j as u64).into());
            let term = &a[j] * ck / &n_row[j];
            abs_s += term.abs();
            s += term;
        }
        worst = worst.max(abs_s.to_f64().unwrap_or(f64::INFINITY));
        coeffs.push(s.to_f64().unwrap_or(f64::NAN));
    }
    let big = coeffs.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
    let condition = if worst == 0.0 {
        1.0
    } else if big == 0.0 {
        f64::INFINITY
    } else {
        worst / big
    };
    Ok(BernsteinConversion { poly: BernsteinPoly { coeffs }, exact: true, condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::binomial::choose_f64;

    #[test]
    fn small_basis_values() {
        assert!((basis_value(3, 1, 0.4).unwrap() - 0.432).abs() < 1e-15);
        assert_eq!(basis_value(3, 4, 0.4).unwrap(), 0.0);
        assert!(basis_value(3, 1, 1.5).is_err());
        assert!(basis_value(3, 1, f64::NAN).is_err());
    }

    #[test]
    fn first_difference_by_hand() {
        // p_{3,1}(0.4) - p_{3,2}(0.4) = 0.432 - 0.288
        let d = basis_diff(3, 0.4, 1).unwrap();
        assert!((d.values[1] - 0.144).abs() < 1e-15);
        assert!((d.values[3] - 0.064).abs() < 1e-15);
        assert_eq!(d.values.len(), 4);
    }

    #[test]
    fn order_zero_is_basis() {
        let d = basis_diff(7, 0.3, 0).unwrap();
        assert_eq!(d.values, basis_values(7, 0.3).unwrap());
    }

    #[test]
    fn backends_agree() {
        let p = BernsteinPoly::new((0..=40).map(|k| ((k * 7) % 5) as f64 - 2.0).collect()).unwrap();
        for i in 0..=50 {
            let x = i as f64 / 50.0;
            let a = p.eval(x).unwrap();
            let b = p.eval_de_casteljau(x).unwrap();
            assert!((a - b).abs() < 1e-12, "x={x}: {a} vs {b}");
        }
    }

    #[test]
    fn elevation_preserves_values() {
        let p = BernsteinPoly::new(vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        let q = p.elevate();
        assert_eq!(q.degree(), 4);
        for x in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert!((p.eval(x).unwrap() - q.eval(x).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn conversion_of_monomials() {
        // x = sum (k/n) p_{n,k};  x^2 = sum k(k-1)/(n(n-1)) p_{n,k}
        let c = power_to_bernstein(&[0.0, 1.0], 5).unwrap();
        assert!(c.exact);
        for (k, v) in c.poly.coeffs().iter().enumerate() {
            assert_eq!(*v, k as f64 / 5.0);
        }
        let c = power_to_bernstein(&[0.0, 0.0, 1.0], 30).unwrap();
        assert!(!c.exact);
        for (k, v) in c.poly.coeffs().iter().enumerate() {
            assert!((v - (k * k.saturating_sub(1)) as f64 / 870.0).abs() < 1e-15);
        }
        assert!(matches!(
            power_to_bernstein(&[1.0, 1.0, 1.0], 1),
            Err(Error::DegreeBelowPolynomial { requested: 1, degree: 2 })
        ));
    }

    #[test]
    fn conversion_condition_reflects_cancellation() {
        // (1-2x)^4 = ((1-x) - x)^4 has coefficients (-1)^k, reached through
        // heavy cancellation of the power-basis terms
        let a = [1.0, -8.0, 24.0, -32.0, 16.0];
        let c = power_to_bernstein(&a, 4).unwrap();
        let want = [1.0, -1.0, 1.0, -1.0, 1.0];
        for (v, w) in c.poly.coeffs().iter().zip(want) {
            assert!((v - w).abs() < 1e-14);
        }
        assert!(c.condition > 10.0);
        let flat = power_to_bernstein(&[2.0], 6).unwrap();
        assert_eq!(flat.condition, 1.0);
    }

    #[test]
    fn moments_small_degree() {
        let n = 12;
        let x = 0.35;
        assert!(moment(n, x, 1).unwrap().abs() < 1e-14);
        assert!((moment(n, x, 2).unwrap() - n as f64 * x * (1.0 - x)).abs() < 1e-13);
        assert!((moment(n, x, 0).unwrap() - 1.0).abs() < 1e-14);
        assert!((abs_moment(n, x, 0, 2).unwrap() - moment(n, x, 2).unwrap()).abs() < 1e-13);
    }

    #[test]
    fn choose_consistency() {
        assert_eq!(choose_f64(30, 15), 155_117_520.0);
    }
}
